"""Classifying handwritten digits with exact and approximate posit multipliers.

The bundled 784-32-10 network was trained in float64.  Its weights are
rounded to posit<16,1> and every multiply-accumulate runs in posit
arithmetic.  Swapping the multiplier barely moves the accuracy.
"""
import time

import numpy as np

from posit_plam import PositFormat, infer, load_dataset, load_model, quantize_model
from posit_plam.nn import bundled_dataset_path, bundled_model_path, float_accuracy

model = load_model(bundled_model_path())
labels, features = load_dataset(bundled_dataset_path())
print(f"{len(labels)} test images, class counts {np.bincount(labels).tolist()}")
print(f"float64 top1 {float_accuracy(model, features, labels):.4f}")

for n, es in [(16, 1), (10, 1), (8, 0)]:
    qmodel = quantize_model(model, PositFormat(n, es))
    row = []
    for mode in ("exact", "plam"):
        t = time.perf_counter()
        r = infer(qmodel, features, labels, mode)
        row.append(f"{mode} {r.summary()} ({time.perf_counter() - t:.1f}s)")
    print(f"posit<{n},{es}>  " + "  |  ".join(row))
