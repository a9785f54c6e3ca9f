"""Timing comparison between exact prediction and the rapid method.

Median wall times with the one-time setup separated from the per-prediction
cost; the rapid method's advantage grows with the grid size because the
per-prediction work is one sparse multiply plus FFTs.
"""

from rapidkrig import run_timing

rows = run_timing(
    ns=(200, 1500),
    grid_ladder=((60, 60), (100, 100), (200, 200)),
    methods=("exact", "rapid-L2", "rapid-L4"),
    reps=3,
    timeout_seconds=120.0,
    seed=1,
)

print(f"{'method':>10} {'n':>6} {'grid':>10} {'setup_s':>10} {'predict_s':>10}")
for r in rows:
    grid = f"{r.grid[0]}x{r.grid[1]}"
    flag = "  (censored)" if r.censored else ""
    print(f"{r.method:>10} {r.n:>6} {grid:>10} {r.setup_seconds:>10.4f} "
          f"{r.predict_seconds:>10.4f}{flag}")

by_key = {(r.method, r.n, r.grid): r for r in rows}
print("\nper-prediction speedup over exact (setup excluded):")
for n in (200, 1500):
    for grid in ((60, 60), (100, 100), (200, 200)):
        exact = by_key[("exact", n, grid)].predict_seconds
        rapid = by_key[("rapid-L4", n, grid)].predict_seconds
        print(f"  n={n:>5} grid {grid[0]}x{grid[1]}: {exact / rapid:7.1f}x")
