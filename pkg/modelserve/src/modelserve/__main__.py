"""CLI: `modelserve --config providers.yaml --host 0.0.0.0 --port 8080`."""

from __future__ import annotations

import argparse

from .app import serve
from .registry import load_config


def main() -> None:
    parser = argparse.ArgumentParser(prog="modelserve", description=__doc__)
    parser.add_argument("--config", help="YAML provider configuration file")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    args = parser.parse_args()
    config = load_config(args.config) if args.config else None
    serve(config, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
