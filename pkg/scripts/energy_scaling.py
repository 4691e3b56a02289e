"""Single-bit write energy of an unconstrained crossbar versus its size.

    python3 scripts/energy_scaling.py [--sizes 4 8 12 16] [--backgrounds 8] [--writes 5]
"""
import argparse

from hybridmem.config import ExperimentConfig
from hybridmem.experiments import run_energy_scaling


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 12, 16])
    ap.add_argument("--backgrounds", type=int, default=8)
    ap.add_argument("--writes", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig()
    cfg.scaling.backgrounds, cfg.scaling.writes, cfg.workload.seed = args.backgrounds, args.writes, args.seed
    out = run_energy_scaling(cfg, args.sizes)
    print(out.files["energy_scaling.txt"], end="")
    e = out.summary["write_energy_J"]
    print(f"largest / smallest = {e[-1] / e[0]:.2f}")


if __name__ == "__main__":
    main()
