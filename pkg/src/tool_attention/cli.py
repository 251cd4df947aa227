"""Command-line entry point: ``tool-attention <subcommand> [flags]``.

Machine output goes to stdout (or ``--out``); logs and turn events go to stderr.
Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from .adapters import AdapterError, LineJsonProcess
from .attention import JsonLinesSink, build_attention
from .catalog import Catalog, generate_testbed, load_registry, save_registry, scaled_specs, scaled_target
from .embed import DEFAULT_DIM, Encoder, HashedNgramEncoder, external_encoder
from .errors import ToolAttentionError
from .loader import disk_fetcher
from .router import RouterConfig
from .state import AgentState, apply_patch
from .tokens import TokenCounter, external_counter, heuristic_counter

log = logging.getLogger("tool_attention")

SUBCOMMANDS = ("build-catalog", "bench", "sweep-theta", "ablate", "scale", "adversarial", "route", "serve")


class UsageError(Exception):
    """Bad flag values that argparse itself cannot catch."""


def _seed_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--seed", type=int, default=42, help="catalog and task seed (default 42)")
    g.add_argument("--registry", metavar="DIR", help="tool registry directory (default: generate the testbed)")
    g.add_argument("--counter", default="heuristic", help="heuristic | external:CMD")
    g.add_argument("--encoder", default="builtin", help="builtin | external:CMD")
    g.add_argument("--theta", type=float, default=0.28, help="score threshold (default 0.28)")
    g.add_argument("--top-k", type=int, default=10, help="active-set cap (default 10)")
    g.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    g.add_argument("--format", choices=("json", "markdown"), default="json")
    g.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="tool-attention", description="Intent-gated tool loading for agents.")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", required=True)

    p = sub.add_parser("build-catalog", parents=[common], help="generate the calibrated testbed registry")
    p.add_argument("--n-tools", type=int, default=120, help="catalog size (default 120)")

    p = sub.add_parser("bench", parents=[common], help="run all methods over generated tasks")
    p.add_argument("--tasks", type=int, default=500, help="tasks per seed (default 500)")
    p.add_argument("--seeds", type=_seed_list, default=[42, 43, 44], help="task seeds (default 42,43,44)")
    p.add_argument("--audit", action="store_true", help="check every prompt's schema section against A_t")
    p.add_argument("--projection", metavar="FILE", help="JSON list of {label, per_token, intercept, unit} rates to project")

    p = sub.add_parser("sweep-theta", parents=[common], help="pick the threshold by F1 over calibration pairs")
    p.add_argument("--pairs", type=int, default=150, help="calibration pairs (default 150)")

    p = sub.add_parser("ablate", parents=[common], help="token columns with components removed or swept")
    p.add_argument("--tasks", type=int, default=500)
    p.add_argument("--seeds", type=_seed_list, default=[42])

    p = sub.add_parser("scale", parents=[common], help="rho at turn 30 as the catalog grows")
    p.add_argument("--sizes", type=_seed_list, default=[60, 120, 250, 500, 1000])
    p.add_argument("--tasks", type=int, default=300)
    p.add_argument("--seeds", type=_seed_list, default=[42])

    p = sub.add_parser("adversarial", parents=[common], help="gate exclusion of poisoned descriptions")
    p.add_argument("--n-poisoned", type=int, default=50)

    p = sub.add_parser("route", parents=[common], help="route one query and print the attention result")
    p.add_argument("--query", required=True)
    p.add_argument("--state", default=None, help="state patch as JSON (auth_scopes, milestones, prior_tool_calls)")
    p.add_argument("--events", metavar="FILE", help="append turn events here (default stderr)")

    p = sub.add_parser("serve", parents=[common], help="run the JSON-RPC gateway")
    p.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--idle-timeout", type=float, default=1800.0, help="session idle timeout in seconds")
    p.add_argument("--registry-mode", action="store_true", help="serve every full definition, ungated")
    p.add_argument("--events", metavar="FILE", help="append turn events here (default stderr)")
    return parser


# -- resolution --------------------------------------------------------------

def resolve_counter(spec: str) -> TokenCounter:
    if spec == "heuristic":
        return heuristic_counter()
    if spec.startswith("external:") and spec[len("external:"):].strip():
        return external_counter(LineJsonProcess(shlex.split(spec[len("external:"):])), name=spec)
    raise UsageError(f"--counter must be 'heuristic' or 'external:CMD', got {spec!r}")


def resolve_encoder(spec: str) -> Encoder:
    if spec == "builtin":
        return HashedNgramEncoder()
    if spec.startswith("external:") and spec[len("external:"):].strip():
        return external_encoder(LineJsonProcess(shlex.split(spec[len("external:"):])), dim=DEFAULT_DIM, name=spec)
    raise UsageError(f"--encoder must be 'builtin' or 'external:CMD', got {spec!r}")


def resolve_catalog(args: argparse.Namespace, counter: TokenCounter) -> Catalog:
    if args.registry:
        return load_registry(args.registry)
    return generate_testbed(seed=args.seed, counter=counter)


def load_projections(path: str) -> list:
    from .bench import LinearProjection

    try:
        items = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(items, dict):
            items = [items]
        return [LinearProjection.from_dict(d) for d in items]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"--projection {path} is not a valid projection file: {exc}") from exc


def router_config(args: argparse.Namespace) -> RouterConfig:
    if args.top_k < 1:
        raise UsageError("--top-k must be >= 1")
    if not -1.0 <= args.theta <= 1.0:
        raise UsageError("--theta must lie in [-1, 1]")
    return RouterConfig(threshold=args.theta, top_k=args.top_k)


def emit(args: argparse.Namespace, payload: Any, markdown: str | None = None) -> None:
    if args.format == "markdown" and markdown is not None:
        text = markdown
    else:
        text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _md_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


# -- subcommands -------------------------------------------------------------

def cmd_build_catalog(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    if args.n_tools < 1:
        raise UsageError("--n-tools must be >= 1")
    specs = scaled_specs(args.n_tools)
    catalog = generate_testbed(specs, scaled_target(specs), seed=args.seed, counter=counter)
    summary = {
        "tools": len(catalog),
        "servers": len(catalog.servers),
        "total_tokens": catalog.total_tokens(),
        "summary_pool_tokens": sum(s.token_count for s in catalog.ordered_summaries()),
        "counter": counter.name,
        "seed": args.seed,
    }
    # --out (or --registry) names the registry directory for this subcommand.
    target = args.out or args.registry
    if target:
        save_registry(catalog, target)
        summary["registry"] = str(target)
        log.info("registry with %d tools written to %s", len(catalog), target)
        args.out = None  # the registry took --out; the summary goes to stdout
    emit(args, summary, _md_table(list(summary), [list(summary.values())]))
    return 0


def cmd_bench(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    from .bench import default_methods, default_task_source, run_benchmark, tool_attention

    if args.tasks < 1:
        raise UsageError("--tasks must be >= 1")
    catalog = resolve_catalog(args, counter)
    methods = default_methods()
    methods[-1] = tool_attention(router_config(args))
    projections = load_projections(args.projection) if args.projection else []
    started = time.perf_counter()
    report = run_benchmark(
        catalog, default_task_source(catalog, args.tasks), methods, seeds=args.seeds, counter=counter, encoder=encoder, audit=args.audit
    )
    log.info("bench finished in %.2fs", time.perf_counter() - started)
    report.project(projections)
    violations = sum(m.violations for m in report.methods)
    emit(args, report.to_json(), report.to_markdown())
    return 1 if violations else 0


def cmd_sweep(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    from .bench import calibration_set, sweep_threshold

    if args.pairs < 1:
        raise UsageError("--pairs must be >= 1")
    catalog = resolve_catalog(args, counter)
    result = sweep_threshold(catalog, calibration_set(catalog, args.pairs, args.seed), encoder, top_k=args.top_k)
    md = _md_table(["theta", "F1"], [[f"{t:.2f}", f"{f:.4f}"] for t, f in result.curve])
    emit(args, result.to_dict(), md + f"\ntheta* = {result.theta_star:.2f} (F1 {result.best_f1:.4f})\n")
    return 0


def cmd_ablate(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    from .bench import ablation_grid, default_task_source

    catalog = resolve_catalog(args, counter)
    report = ablation_grid(catalog, default_task_source(catalog, args.tasks), args.seeds, counter, encoder)
    emit(args, report.to_json(), report.to_markdown())
    return 0


def cmd_scale(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    from .bench import scaling_curve

    rows = scaling_curve(args.sizes, args.tasks, args.seeds, args.seed, counter, encoder, top_k=args.top_k)
    names = list(rows[0].rho) if rows else []
    md = _md_table(["N"] + names, [[r.n_tools] + [f"{r.rho[n]:.3f}" for n in names] for r in rows])
    emit(args, {"rows": [r.to_dict() for r in rows]}, md)
    return 0


def cmd_adversarial(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    from .bench import adversarial_suite

    catalog = resolve_catalog(args, counter)
    rep = adversarial_suite(catalog, args.n_poisoned, args.seed, encoder, router_config(args), counter)
    md = _md_table(
        ["subset", "result"],
        [
            ["unrelated payload: excluded", f"{rep.excluded}/{rep.n_poisoned} ({rep.exclusion_rate:.2f})"],
            ["query-mimicking payload: included", f"{rep.paraphrase_included}/{rep.paraphrase_total}"],
            ["summary identical to query: included", str(rep.identical_included)],
        ],
    )
    emit(args, rep.to_dict(), md)
    return 0


def cmd_route(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    catalog = resolve_catalog(args, counter)
    fetcher = disk_fetcher(args.registry) if args.registry else None
    sink = JsonLinesSink(args.events) if args.events else JsonLinesSink(sys.stderr)
    try:
        ta = build_attention(catalog, encoder, counter, fetcher=fetcher, cfg=router_config(args), event_sink=sink)
        state = AgentState()
        if args.state:
            try:
                state = apply_patch(state, json.loads(args.state))
            except (json.JSONDecodeError, TypeError, ValueError, KeyError) as exc:
                raise UsageError(f"--state is not a valid state patch: {exc}") from exc
        result, _, _ = ta.before_model(args.query, state)
    finally:
        sink.close()
    payload = result.to_dict()
    md = _md_table(["tool", "score"], [[r.tool_id, f"{r.score:.4f}"] for r in result.active])
    emit(args, payload, md + f"\nphase1 {result.phase1_tokens} tokens, phase2 {result.phase2_tokens} tokens\n")
    return 0


def cmd_serve(args: argparse.Namespace, counter: TokenCounter, encoder: Encoder) -> int:
    from .gateway import Gateway, TcpGatewayServer, serve_stdio

    if not args.registry:
        raise UsageError("serve needs --registry DIR")
    sink = JsonLinesSink(args.events) if args.events else JsonLinesSink(sys.stderr)
    gateway = Gateway.from_registry(
        args.registry,
        cfg=router_config(args),
        encoder=encoder,
        counter=counter,
        event_sink=sink,
        idle_timeout=args.idle_timeout,
        gated=not args.registry_mode,
    )
    try:
        if args.transport == "stdio":
            log.info("serving %d tools on stdio", len(gateway.catalog))
            serve_stdio(gateway)
        else:
            server = TcpGatewayServer(gateway, args.host, args.port)
            log.info("serving %d tools on %s:%d", len(gateway.catalog), *server.address)
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
            finally:
                server.server_close()
    finally:
        sink.close()
    return 0


HANDLERS = {
    "build-catalog": cmd_build_catalog,
    "bench": cmd_bench,
    "sweep-theta": cmd_sweep,
    "ablate": cmd_ablate,
    "scale": cmd_scale,
    "adversarial": cmd_adversarial,
    "route": cmd_route,
    "serve": cmd_serve,
}


def _configure_logging(level: str) -> None:
    root = logging.getLogger("tool_attention")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 2
        return int(exc.code or 0)
    _configure_logging(args.log_level)
    banner = {k: v for k, v in sorted(vars(args).items())}
    log.info("tool-attention %s config: %s", args.command, json.dumps(banner, sort_keys=True, default=str))
    try:
        counter = resolve_counter(args.counter)
        encoder = resolve_encoder(args.encoder)
        return HANDLERS[args.command](args, counter, encoder)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        log.error("%s", exc)
        return 2
    except (ToolAttentionError, AdapterError, OSError, ValueError, KeyError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
