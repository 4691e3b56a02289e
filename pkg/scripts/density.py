"""Bit-density comparison table at a given feature size.

    python3 scripts/density.py [--feature-nm 45] [--tiles 4 8 16]
"""
import argparse

from hybridmem.area import AreaSpec, comparison_table, format_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--feature-nm", type=float, default=45.0)
    ap.add_argument("--tiles", type=int, nargs="+", default=[4, 8])
    args = ap.parse_args()

    spec = AreaSpec(feature_nm=args.feature_nm)
    rows = comparison_table(spec, [(n, n) for n in args.tiles])
    print(format_table(rows, spec))


if __name__ == "__main__":
    main()
