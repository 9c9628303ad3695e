"""
A tour of the built-in benchmark generators
===========================================

Three-class waveform signals (length 32) and three-shape envelope signals
(length 128, cylinder / bell / funnel). Run with python3; prints only.
"""

import numpy as np

from discwave.datasets import (
    ShapeSpec,
    WaveformSpec,
    generate_shape,
    generate_waveform,
    waveform_mixture,
)

rng_seed = 7

# Each class mixes two of three fixed triangular bumps with a random convex
# weight, then adds unit Gaussian noise. With the noise turned off and the
# weight pinned to an endpoint the signal IS one of the bumps.
ds = generate_waveform(WaveformSpec(per_class_count=50, seed=rng_seed))
print(f"waveform: {ds.n_examples} signals of length {ds.signal_length}, classes {ds.classes}")
for c in ds.classes:
    block = ds.signals[ds.class_ids == c]
    print(f"  class {c}: mean peak at sample {int(np.argmax(block.mean(axis=0))) + 1}")

clean = waveform_mixture(1, u=0.0)
on = np.flatnonzero(clean) + 1
print(f"clean class-1 endpoint mixture: bump on samples {on[0]}..{on[-1]}, "
      f"peak {clean.max():.0f} at sample {int(np.argmax(clean)) + 1}")

# Binary problems come from restricting to a class pair; labels become -1 for
# the smaller id and +1 for the larger one, class ids are kept for reporting.
pair = ds.restrict_pair(1, 2)
print(f"pair (1,2): {pair.n_examples} signals, label counts "
      f"{int(np.sum(pair.labels < 0))} / {int(np.sum(pair.labels > 0))}")

# The shape generator draws an envelope (constant, rising ramp to a random
# height, or falling ramp) over a random on-interval, plus noise.
shapes = generate_shape(ShapeSpec(per_class_count=20, seed=rng_seed))
print(f"shapes: {shapes.n_examples} signals of length {shapes.signal_length}, "
      f"classes {shapes.classes}")
for c in shapes.classes:
    block = shapes.signals[shapes.class_ids == c]
    left = block[:, : shapes.signal_length // 2].mean()
    right = block[:, shapes.signal_length // 2 :].mean()
    print(f"  class {c}: mean level left half {left:+.2f}, right half {right:+.2f}")
