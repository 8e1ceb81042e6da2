"""Cost frontier as the rollover cap tightens.

Minimizes expected interest in the invariant law over the three-tenor
issuance simplex, subject to a first-rung rollover cap and 5 percent
floors on every issued tenor. Tightening the cap drains mass out of the
short end in two phases: first tenor 1 into tenor 3 (the 10y floor binds),
then tenor 3 into tenor 10 (the 1y floor binds). Below the minimum
feasible cap the point is reported infeasible rather than bent.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import debtladder as dl

from pathlib import Path

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def main():
    scenario = dl.baseline_scenario()
    cfg = scenario.config
    caps = [round(c, 4) for c in np.arange(0.50, 0.075, -0.025)] + [0.085, 0.080]
    points = dl.frontier(cfg, caps, spec=scenario.optimization)

    tenors = sorted(scenario.optimization.lower_bounds)
    print("cap      " + "".join(f"    f_{j:<4d}" for j in tenors)
          + "   theta_1    E[interest]   binding")
    for p in points:
        if p.error is not None:
            print(f"{p.rollover_cap:5.3f}    {'-':>8s} {'-':>8s} {'-':>8s}"
                  f"   {'-':>7s}    {'-':>11s}   {p.error}")
            continue
        fs = "".join(f"  {p.allocation[j]:8.4f}" for j in tenors)
        print(f"{p.rollover_cap:5.3f}  {fs}   {p.theta1:7.4f}    {p.objective_value:11.6f}"
              f"   {', '.join(p.binding_constraints)}")

    ok = [p for p in points if p.error is None]
    print()
    print(f"feasible caps: {len(ok)} of {len(points)};"
          f" objective rises {ok[0].objective_value:.4f} -> {ok[-1].objective_value:.4f}"
          f" as the cap falls {ok[0].rollover_cap} -> {ok[-1].rollover_cap}")

    caps_ok = [p.rollover_cap for p in ok]
    alloc = np.array([[p.allocation[j] for j in tenors] for p in ok])
    obj = [p.objective_value for p in ok]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    ax1.stackplot(caps_ok, alloc.T, labels=[f"tenor {j}" for j in tenors], alpha=0.8)
    ax1.invert_xaxis()  # tighter caps to the right, reading as a waterfall
    ax1.set_xlabel("rollover cap (tightening right)")
    ax1.set_ylabel("issuance weight")
    ax1.set_title("Optimal mix drains 1 -> 3 -> 10")
    ax1.legend(loc="center left", fontsize=8)
    ax2.plot(caps_ok, obj, marker="o", ms=3)
    ax2.invert_xaxis()
    ax2.set_xlabel("rollover cap (tightening right)")
    ax2.set_ylabel("expected interest at the optimum")
    ax2.set_title("Price of rollover safety")
    fig.tight_layout()
    fig.savefig(OUT / "frontier_waterfall.png", dpi=120)
    print(f"saved {OUT / 'frontier_waterfall.png'}")


if __name__ == "__main__":
    main()
