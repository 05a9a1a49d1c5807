"""Run a table scorer behind the wire protocol.

Usage:
    python -m capkit.scorer_server TABLE.json            # stdio
    python -m capkit.scorer_server TABLE.json --port N   # TCP on 127.0.0.1
"""

from __future__ import annotations

import argparse

from capkit.scorer import load_table, serve_stdio, serve_tcp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("table", help="scorer table JSON file")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0, help="TCP port (0 = stdio)")
    parser.add_argument(
        "--max-connections", type=int, default=None,
        help="exit after this many TCP connections",
    )
    args = parser.parse_args(argv)
    scorer = load_table(args.table)
    if args.port:
        serve_tcp(scorer, args.host, args.port, args.max_connections)
    else:
        serve_stdio(scorer)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
