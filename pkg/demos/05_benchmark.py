"""Timing the reference oracle against the optimized filter.

Uses a mid-sized volume so the demo finishes in well under a minute; run
the CLI on a full-size volume for the real numbers, e.g.

    despeckle3d synth --kind constant --dims 128 128 32 --sigma 0.2 -o /tmp/fix
    despeckle3d bench /tmp/fix/speckled.mhd --rescale --mode full3d --threads 1,4
"""

import os
import time
from statistics import median

import numpy as np

from despeckle3d import ObnlmParams, Volume3D, filter_obnlm, filter_obnlm_reference

volume = Volume3D(np.random.default_rng(0).random((64, 64, 16)))
print(f"volume {volume.dims}, host has {os.cpu_count()} cpu(s)\n")

for mode in ("slice2d", "full3d"):
    params = ObnlmParams(mode=mode)

    # warm-up compiles the kernels so timings measure the algorithms
    warm = Volume3D(volume.data[:12, :12, :8].copy())
    filter_obnlm_reference(warm, params)
    filter_obnlm(warm, params)

    t0 = time.perf_counter()
    filter_obnlm_reference(volume, params)
    t_ref = time.perf_counter() - t0

    rows = []
    for threads in (1, 2, 4):
        runs = []
        for _ in range(3):
            t0 = time.perf_counter()
            filter_obnlm(volume, params, threads=threads)
            runs.append(time.perf_counter() - t0)
        rows.append((threads, median(runs)))

    print(f"{mode}: reference {t_ref:.2f}s")
    for threads, seconds in rows:
        print(f"  optimized, {threads} thread(s): {seconds:.3f}s  "
              f"(speedup {t_ref / seconds:.1f}x)")
    print()
