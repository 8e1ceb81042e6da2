# ==============================================================
# Steady-state tour of the bundled three-tenor ladder
#   * per-tenor issuance mix, steady shares, WAC weights
#   * feedback coefficient phi and the deficit-driven regime test
#   * no-growth limits (1/NWAM rollover floor) as gamma -> 1
#   * critical growth factor where phi crosses 1 (bisection)
#   * duration law: cheapest single tenor for a rollover tolerance
# ==============================================================

import dataclasses

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import debtladder as dl

OUT = __import__("pathlib").Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scenario = dl.baseline_scenario()
cfg = scenario.config
m = dl.steady_metrics(cfg)

# ------------------------ #
# 1. THE LADDER AT A GLANCE #
# ------------------------ #
print("growth factor gamma    ", cfg.growth_factor)
print("max maturity           ", cfg.max_maturity)
print("regime                 ", m.regime.name)
print("feedback phi           ", f"{m.phi:.6f}   (deficit-driven iff phi < 1)")
print("steady normalized debt ", f"{m.total_debt:.4f}  (n_infinity = {m.n_infinity:.4f})")
print("weighted avg coupon    ", f"{m.wac:.6f}")
print("steady rollover share  ", f"{m.rollover:.6f}")
print()

issued = np.nonzero(cfg.allocation)[0]
print("tenor  issuance f   steady share   wac weight   mean rate")
for j in issued:
    print(
        f"{j + 1:5d}  {cfg.allocation[j]:10.3f}   {m.shares[j]:12.6f}"
        f"   {m.wac_weights[j]:10.6f}   {cfg.mean_rates[j]:9.4f}"
    )
print()

# ------------------------ #
# 2. NO-GROWTH LIMITS      #
# ------------------------ #
# As gamma -> 1 the steady shares flatten and rollover tends to 1/NWAM.
lim = dl.no_growth_limits(cfg)
print(f"NWAM {lim.nwam:.4f};  limit rollover 1/NWAM = {lim.rollover:.6f};  limit wac = {lim.wac:.6f}")
for g in (1.04, 1.02, 1.01, 1.005):
    mg = dl.steady_metrics(dataclasses.replace(cfg, growth_factor=g))
    print(f"  gamma={g:<6} rollover={mg.rollover:.6f}  wac={mg.wac:.6f}")
print()

# ------------------------ #
# 3. CRITICAL GROWTH       #
# ------------------------ #
# phi rises as gamma falls; the regime flips where gamma - 1 matches the
# steady WAC (both move, so bisect on phi itself).
lo, hi = 1.0005, 1.08
for _ in range(60):
    mid = 0.5 * (lo + hi)
    if dl.feedback_phi(dataclasses.replace(cfg, growth_factor=mid)) > 1.0:
        lo = mid
    else:
        hi = mid
g_crit = 0.5 * (lo + hi)
print(f"critical growth factor: gamma* = {g_crit:.6f}  (phi(gamma*) = "
      f"{dl.feedback_phi(dataclasses.replace(cfg, growth_factor=g_crit)):.8f})")

grid = np.linspace(1.002, 1.16, 120)
phis = [dl.feedback_phi(dataclasses.replace(cfg, growth_factor=g)) for g in grid]

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(grid, phis, lw=2)
ax.axhline(1.0, color="k", ls="--", lw=1)
ax.axvline(g_crit, color="crimson", ls=":", lw=1.5, label=f"gamma* = {g_crit:.4f}")
ax.set_xlabel("growth factor gamma")
ax.set_ylabel("feedback coefficient phi")
ax.set_title("Regime boundary: phi crosses 1 where growth stops outpacing the coupon bill")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "phi_vs_growth.png", dpi=120)
print(f"saved {OUT / 'phi_vs_growth.png'}")
print()

# ------------------------ #
# 4. DURATION LAW          #
# ------------------------ #
# With an upward mean curve the cheapest ladder meeting a rollover
# tolerance R concentrates all issuance on one effective tenor j*(R),
# blended across its two integer neighbours; as gamma -> 1 the target
# tends to 1/R, and positive growth pulls it shorter.
print("rollover tolerance ->  continuous j*   integer bracket   blend on lower tenor")
for tol in (0.5, 1.0 / 3.0, 0.3, 0.25, 0.2):
    ot = dl.optimal_tenor(cfg.growth_factor, tol)
    print(f"  R = {tol:<8.4f}      {ot.j_star:8.4f}      [{ot.tenor_low}, {ot.tenor_high}]"
          f"           {ot.blend_low:.4f}")
