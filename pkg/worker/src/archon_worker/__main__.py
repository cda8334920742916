from __future__ import annotations

import argparse
import sys

from .session import main_loop


def main() -> int:
    parser = argparse.ArgumentParser(
        prog="archon-worker",
        description="GNN training worker speaking the archon wire protocol")
    parser.add_argument("--data-dir", default=None,
                        help="directory holding dataset fixtures and registry.json")
    args = parser.parse_args()
    return main_loop(args.data_dir)


if __name__ == "__main__":
    sys.exit(main())
