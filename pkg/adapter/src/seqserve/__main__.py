"""Command line entry: configure a backend and serve until end-of-input."""

import argparse
import sys

from . import DEFAULT_TOKEN_CAP, AdapterConfig, ConfigError, StreamLost, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="seqserve",
        description="Serve a sequence model behind the integrator wire protocol.",
    )
    parser.add_argument(
        "--stub", metavar="TOKENS",
        help="stub backend answering with this space-separated candidate",
    )
    parser.add_argument(
        "--score", type=float, default=0.5, help="the stub's fixed score"
    )
    parser.add_argument(
        "--backend", metavar="MODULE:ATTR",
        help="import a backend callable instead of the stub",
    )
    parser.add_argument(
        "--tcp", metavar="HOST:PORT",
        help="listen on TCP instead of standard streams (port 0 picks one)",
    )
    parser.add_argument("--token-cap", type=int, default=DEFAULT_TOKEN_CAP)
    args = parser.parse_args(argv)

    try:
        cfg = AdapterConfig(
            stub_candidate=tuple(args.stub.split()) if args.stub else None,
            stub_score=args.score,
            backend_path=args.backend,
            tcp=args.tcp,
            token_cap=args.token_cap,
        )
        serve(cfg)
    except ConfigError as exc:
        print(f"seqserve: {exc}", file=sys.stderr)
        return 1
    except StreamLost as exc:
        print(f"seqserve: stream lost: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
