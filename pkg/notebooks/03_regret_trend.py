# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Averaged regret against the horizon
#
# A small version of the trend sweep: strategic regret divided by T for
# growing horizons, averaged over seeds, next to the closed-form bound.

# %%
from statistics import fmean

from divauction.experiment import GameSpec, grid_valuations, run_many

Ts = [2**8, 2**10, 2**12, 2**14, 2**16]
seeds = range(10)
for M in (1, 3):
    for mode in ("envelope_always_reject", "envelope_coin:0.5"):
        specs = [GameSpec(M, T, 0.8, tuple(grid_valuations(s, M)), (mode,) * M, s) for T in Ts for s in seeds]
        results = run_many(specs, workers=1)
        row = []
        for T in Ts:
            group = [res for res in results if res.spec.T == T]
            avg = fmean(float(res.report.total) / T for res in group)
            bound = max(res.report.bound_theorem1 for res in group) / T
            row.append(f"{avg:.4f} (<= {bound:.3f})")
        print(f"M={M} {mode:24s}", "  ".join(row))

# %% [markdown]
# The last buyer count in the acceptance grid is 5; the whole grid runs
# through `divauction verify all` or `pytest tests/test_acceptance.py`.
