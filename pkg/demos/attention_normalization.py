"""Compare the two score-normalization schemes.

Sharpening (softmax) piles weight onto the best-scoring position;
smoothing (sum-normalized sigmoids) keeps several relevant positions in
play.  Scores are cosines, so they live in [-1, 1] -- which caps how
peaked either distribution can get, and smoothing much more so.
"""

import numpy as np

from seqattn.model import normalize_sharpening, normalize_smoothing

print("one strong score among weak ones")
print(f"{'scores':38s} {'sharpening max':>14s} {'smoothing max':>14s}")
for t in (2, 5, 10, 20, 40):
    e = np.full(t, -1.0)
    e[0] = 1.0
    sharp = normalize_sharpening(e)
    smooth = normalize_smoothing(e)
    label = f"T={t:2d}, e = (1, -1, ..., -1)"
    print(f"{label:38s} {sharp.max():14.4f} {smooth.max():14.4f}")

print("\nshift behaviour: softmax ignores a constant offset, sigmoid does not")
e = np.array([1.0, 0.0])
for shift in (0.0, 2.0, 5.0):
    sharp = normalize_sharpening(e + shift)
    smooth = normalize_smoothing(e + shift)
    print(f"e + {shift:3.1f}: sharpening {np.round(sharp, 6)}  smoothing {np.round(smooth, 6)}")

print("\nspot checks for e = (1, 0)")
print("  sharpening:", np.round(normalize_sharpening(e), 6), "= (e/(e+1), 1/(e+1))")
print("  smoothing: ", np.round(normalize_smoothing(e), 6), "= (2e/(3e+1), (e+1)/(3e+1))")

rng = np.random.default_rng(0)
wins = sum(
    normalize_smoothing(v).max() <= normalize_sharpening(v).max()
    for v in (rng.uniform(-1, 1, size=rng.integers(2, 50)) for _ in range(1000)))
print(f"\nsmoothing is never more peaked than sharpening: {wins}/1000 random score vectors")
