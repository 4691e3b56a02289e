"""How hard the two-step write disturbs half-selected devices.

    python3 scripts/half_select.py [--preset tile4] [--rounds 10]

Reports the worst half-select voltage per write and the resulting read
populations, which explain where the noise margin goes.
"""
import argparse

import numpy as np

from hybridmem.config import preset
from hybridmem.experiments import margin_run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=["tile4", "tile8"], default="tile4")
    ap.add_argument("--rounds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    cfg = preset(args.preset)
    cfg.workload.seed = args.seed
    rep, samples, _, mon = margin_run(cfg, rounds=args.rounds, monitor=True)
    th = cfg.device_params().Vp
    print(f"half-select |v| per write: max {mon.worst.max():.3f} V, median {np.median(mon.worst):.3f} V "
          f"(threshold {th} V, {np.mean(mon.worst > th):.0%} of writes above it)")
    ones = np.array([s.peak for s in samples if s.expected == 1])
    zeros = np.array([s.peak for s in samples if s.expected == 0])
    for name, pop in (("stored 1", ones), ("stored 0", zeros)):
        q = np.percentile(pop, [0, 5, 50, 95, 100])
        print(f"{name}: n={len(pop)}  " + "  ".join(f"{v:.4f}" for v in q) + "  V (min p5 p50 p95 max)")
    print(f"margin {rep.margin * 1e3:.1f} mV, {rep.errors} errors at best threshold {rep.best_threshold:.4f} V")


if __name__ == "__main__":
    main()
