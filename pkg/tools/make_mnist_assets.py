"""Rebuild the bundled MNIST subset and the float-trained 784-32-10 MLP.

The 5,000-sample MNIST extract shipped inside the mlxtend wheel is split
into 3,000 training and 2,000 held-out samples.  Only the held-out part is
bundled.  The 1/255 pixel scaling is folded into the first layer, so the
bundled CSV keeps raw 0..255 intensities.

    pip download mlxtend --no-deps -d /tmp/mlx
    python tools/make_mnist_assets.py /tmp/mlx/mlxtend-*.whl
"""
import argparse
import gzip
import io
import json
import zipfile
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "posit_plam" / "data"
MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def load(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read(MEMBER))
    data = np.loadtxt(io.BytesIO(raw), delimiter=",")
    return data[:, :-1], data[:, -1].astype(int)


def train(x, y, hidden=32, epochs=60, lr=1e-3, batch=64, seed=0):
    rng = np.random.default_rng(seed)
    sizes = [x.shape[1], hidden, 10]
    params = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        params += [rng.normal(0, np.sqrt(2 / fan_in), (fan_out, fan_in)), np.zeros(fan_out)]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    onehot = np.eye(10)[y]
    step = 0
    for _ in range(epochs):
        order = rng.permutation(len(x))
        for i in range(0, len(x), batch):
            idx = order[i:i + batch]
            xb, tb = x[idx], onehot[idx]
            w1, b1, w2, b2 = params
            h_pre = xb @ w1.T + b1
            h = np.maximum(h_pre, 0)
            logits = h @ w2.T + b2
            p = np.exp(logits - logits.max(1, keepdims=True))
            p /= p.sum(1, keepdims=True)
            d_logits = (p - tb) / len(idx)
            d_h = d_logits @ w2 * (h_pre > 0)
            grads = [d_h.T @ xb + 1e-4 * w1, d_h.sum(0), d_logits.T @ h + 1e-4 * w2, d_logits.sum(0)]
            step += 1
            for j, g in enumerate(grads):
                m[j] = 0.9 * m[j] + 0.1 * g
                v[j] = 0.999 * v[j] + 0.001 * g * g
                mh, vh = m[j] / (1 - 0.9**step), v[j] / (1 - 0.999**step)
                params[j] -= lr * mh / (np.sqrt(vh) + 1e-8)
    return params


def accuracy(params, x, y):
    w1, b1, w2, b2 = params
    logits = np.maximum(x @ w1.T + b1, 0) @ w2.T + b2
    return float((logits.argmax(1) == y).mean())


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("wheel")
    args = ap.parse_args()

    x, y = load(args.wheel)
    order = np.random.default_rng(2021).permutation(len(x))
    test, tr = order[:2000], order[2000:]
    params = train(x[tr] / 255.0, y[tr])
    print(f"train acc {accuracy(params, x[tr] / 255.0, y[tr]):.4f}  test acc {accuracy(params, x[test] / 255.0, y[test]):.4f}")

    w1, b1, w2, b2 = params
    w1 = w1 / 255.0

    def rnd(a):
        return [float(f"{v:.7g}") for v in a]

    model = {
        "input_dim": 784,
        "layers": [
            {"kind": "dense", "activation": "relu", "weights": [rnd(r) for r in w1], "bias": rnd(b1)},
            {"kind": "dense", "activation": "none", "weights": [rnd(r) for r in w2], "bias": rnd(b2)},
        ],
    }
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "mlp_mnist.json").write_text(json.dumps(model, separators=(",", ":")) + "\n")
    with open(OUT / "mnist2k.csv", "w") as fh:
        fh.write("label," + ",".join(f"px{i}" for i in range(784)) + "\n")
        for i in test:
            fh.write(f"{y[i]}," + ",".join(str(int(v)) for v in x[i]) + "\n")


if __name__ == "__main__":
    main()
