# Fan chart for the stochastic ladder under correlated AR(1) drivers.
#
# 2000 seeded paths, warm-started at the invariant mean so the fan shows
# stationary dispersion rather than the transition climb. Percentile bands
# are plotted against the closed-form invariant means. With persistence
# this high (0.98 on every driver) the closed forms, which price the shock
# as a fresh draw each period, sit a few percent above the simulated
# long-run mean; the bands still bracket them comfortably.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import debtladder as dl

from pathlib import Path

PATHS = 2000
HORIZON = 150
SEED = 0
PCTS = (5.0, 15.0, 50.0, 85.0, 95.0)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

cfg = dl.baseline_scenario().config
rep = dl.invariant_metrics(cfg)

spec = dl.SimulationSpec(horizon=HORIZON, paths=PATHS, master_seed=SEED,
                         burn_in=0, warm_start=True)
ens = dl.run_simulation(cfg, spec)
stats = dl.ensemble_stats(ens, percentiles=PCTS)

print(f"{PATHS} paths x {HORIZON} periods, seed {SEED}, divergent paths: {int(ens.divergent.sum())}")
print(f"closed-form invariant means: debt {rep.total_debt:.4f}, next interest {rep.next_interest:.4f}")
print(f"ensemble means at t={HORIZON - 1}:  debt {ens.total_debt[:, -1].mean():.4f},"
      f" next interest {ens.next_interest[:, -1].mean():.4f}")
print()
print("percentile bands at the final period:")
for metric in ("total_debt", "next_interest", "rollover"):
    band = stats.bands[metric][:, -1]
    cells = "  ".join(f"p{int(p)}={v:.4f}" for p, v in zip(PCTS, band))
    print(f"  {metric:13s} {cells}")

fig, axes = plt.subplots(2, 1, figsize=(9, 7), sharex=True)
t = np.arange(HORIZON)
for ax, metric, ref, label in (
    (axes[0], "total_debt", rep.total_debt, "normalized total debt"),
    (axes[1], "next_interest", rep.next_interest, "next-period interest"),
):
    b = stats.bands[metric]
    ax.fill_between(t, b[0], b[4], color="steelblue", alpha=0.20, label="5-95 band")
    ax.fill_between(t, b[1], b[3], color="steelblue", alpha=0.40, label="15-85 band")
    ax.plot(t, b[2], color="navy", lw=1.5, label="median")
    ax.plot(t, stats.means[metric], color="k", lw=1.0, ls="-.", label="ensemble mean")
    ax.axhline(ref, color="crimson", ls="--", lw=1.2, label="closed-form mean")
    ax.set_ylabel(label)
    ax.legend(fontsize=8, ncol=2)
axes[1].set_xlabel("period")
axes[0].set_title(f"Stationary fan, {PATHS} paths, warm start at the invariant mean")
fig.tight_layout()
fig.savefig(OUT / "fan_chart.png", dpi=120)
print(f"\nsaved {OUT / 'fan_chart.png'}")
