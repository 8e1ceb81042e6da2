# ==============================================================
# Interest-to-debt cost ratio as rate/deficit correlation varies
#   * closed-form invariant ratio on a dense rho grid
#   * Monte Carlo ratio-of-means at five points, 20k paths each
#   * slope quoted in basis points per 0.1 of correlation
# ==============================================================
#
# Negative rho (deficits widen when rates fall) cheapens the ladder,
# positive rho makes it dearer. The closed-form slope is tiny because
# it prices one period of comovement; simulated paths compound the
# comovement through drivers with persistence 0.98, so the measured
# slope is two orders steeper and carries a level offset. Direction
# and monotonicity agree; magnitudes are an honest open gap between
# the one-shot invariant law and the persistent-driver process.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import debtladder as dl

from pathlib import Path

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

cfg = dl.baseline_scenario().config

# With three mutually independent rate innovations the joint Gaussian is
# positive semidefinite only for K rho^2 <= 1, i.e. |rho| <= 0.577; the
# sweep reports the violation instead of silently clipping.
edge = dl.rho_sweep(cfg, [-0.6, 0.6])
for r in edge:
    print(f"rho={r.rho:+.2f}: {r.error}")
print()

dense = np.round(np.linspace(-0.57, 0.57, 39), 4)
analytic = dl.rho_sweep(cfg, list(dense))

mc_grid = [-0.5, -0.25, 0.0, 0.25, 0.5]
mc = dl.rho_sweep(cfg, mc_grid, mc_paths=20_000, mc_horizon=100, mc_burn_in=20, seed=3)

ratios = np.array([r.cost_ratio for r in analytic])
slope_bp = (ratios[-1] - ratios[0]) / (dense[-1] - dense[0]) * 0.1 * 1e4
print(f"closed-form ratio: {ratios[0]:.6f} at rho={dense[0]} -> {ratios[-1]:.6f} at rho={dense[-1]}")
print(f"closed-form slope: {slope_bp:.4f} bp per 0.1 rho (strictly increasing: "
      f"{bool(np.all(np.diff(ratios) > 0))})")
print()
print("rho     analytic ratio   mc ratio-of-means   mc se      psd")
for r in mc:
    print(f"{r.rho:+.2f}    {r.cost_ratio:.6f}         {r.mc_ratio:.6f}          {r.mc_se:.6f}"
          f"   {r.psd_ok}")
mc_slope = (mc[-1].mc_ratio - mc[0].mc_ratio) / (mc[-1].rho - mc[0].rho) * 0.1 * 1e4
print(f"\nsimulated slope: {mc_slope:.2f} bp per 0.1 rho"
      f" (persistence compounds the one-period comovement)")

fig, ax = plt.subplots(figsize=(7.5, 4.5))
ax.plot(dense, ratios, lw=2, label="closed-form invariant ratio")
ax.errorbar(mc_grid, [r.mc_ratio for r in mc], yerr=[2 * r.mc_se for r in mc],
            fmt="o", ms=4, capsize=3, color="crimson", label="Monte Carlo (+/- 2 se)")
ax.set_xlabel("innovation correlation rho")
ax.set_ylabel("E[interest] / E[debt]")
ax.set_title("Cost ratio vs driver correlation")
ax.legend(fontsize=9)
fig.tight_layout()
fig.savefig(OUT / "correlation_sweep.png", dpi=120)
print(f"saved {OUT / 'correlation_sweep.png'}")
