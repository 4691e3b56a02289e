"""Table 1 style comparison of the 4x4 and 8x8 hybrid tiles.

    python3 scripts/table1.py [--rounds 50] [--seed 1] [--sweep]

Runs the seeded read/write workload and the writes-only / reads-only energy
runs for both presets, then (optionally) the R_s sweep on the 4x4 tile.
"""
import argparse
import time

from hybridmem import analysis
from hybridmem.config import preset
from hybridmem.experiments import energy_runs, margin_run, sweep_point


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--sweep", action="store_true", help="also sweep R_s over {0.5,1,2,4,8} R_on on 4x4")
    args = ap.parse_args()

    print(f"{'tile':>5} {'margin_mV':>10} {'errors':>12} {'write_pJ/bit':>13} {'read_fJ/bit':>12} {'peak_uA':>8}")
    for name in ("tile4", "tile8"):
        cfg = preset(name)
        cfg.workload.rounds, cfg.workload.seed = args.rounds, args.seed
        t0 = time.perf_counter()
        rep, *_ = margin_run(cfg)
        en = energy_runs(cfg)
        print(f"{rep.meta['tile']:>5} {rep.margin * 1e3:>10.1f} {rep.errors:>6}/{rep.n_samples:<5} "
              f"{en.write_energy_per_bit * 1e12:>13.3f} {en.read_energy_per_bit * 1e15:>12.3f} "
              f"{en.peak_switch_current * 1e6:>8.1f}   ({time.perf_counter() - t0:.0f} s)", flush=True)

    if args.sweep:
        cfg = preset("tile4")
        cfg.workload.seed = args.seed
        cfg.sweep.rounds = args.rounds
        rows = analysis.sweep({"sense_r_ron": cfg.sweep.sense_r_ron}, cfg.to_dict(), sweep_point)
        print("\nR_s/R_on  margin_mV  errors  min_one_V  max_zero_V")
        for r in rows:
            m = r.result
            print(f"{r.coords['sense_r_ron']:>8g} {m['margin'] * 1e3:>10.1f} {m['errors']:>7} "
                  f"{m['min_one']:>10.4f} {m['max_zero']:>11.4f}{'  *' if r.best else ''}")


if __name__ == "__main__":
    main()
