"""Command-line entry point.

Subcommands map one-to-one onto the experiment kinds (plus ``show`` for
inspecting a serialized network).  Exit codes: 0 when the run's checks
all passed, 1 when any check failed (including routing-certification
failures during assembly), 2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import CertificationError, ConfigError, ParseError
from ..moe_core import MoeNetwork, active_param_count
from .experiments import experiment_config, run_experiment
from .io import load_config, load_network

_KIND_BY_COMMAND = {
    "construct": "construct",
    "audit": "audit",
    "rate": "rate_sweep",
    "compare": "compare",
    "gadgets": "verify_gadgets",
}


def _parse_widths(text: str):
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"cannot parse widths list {text!r}") from None


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="TOML or JSON experiment config")
    sub.add_argument("--out", type=Path, default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="RNG seed")
    sub.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moe-approx",
        description="Constructive mixture-of-experts approximation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a routed network and certify it")
    _add_common(p)
    p.add_argument("--target", help="built-in target name")
    p.add_argument("--width", type=int, default=None, help="expert width")
    p.add_argument("--grid", type=int, default=None, help="audit grid points per axis")
    p.add_argument(
        "--construction",
        choices=("auto", "warmup", "shallow", "deep"),
        default=None,
    )
    p.add_argument("--chart-mode", choices=("auto", "linear", "general"), default=None)

    p = sub.add_parser("audit", help="routing audit of a fresh construction")
    _add_common(p)
    p.add_argument("--target", help="built-in target name")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument(
        "--construction",
        choices=("auto", "warmup", "shallow", "deep"),
        default=None,
    )
    p.add_argument("--chart-mode", choices=("auto", "linear", "general"), default=None)

    p = sub.add_parser("rate", help="error-vs-width sweep with a rate fit")
    _add_common(p)
    p.add_argument("--target", help="built-in target name")
    p.add_argument("--widths", help="comma-separated expert widths")
    p.add_argument("--grid", type=int, default=None)

    p = sub.add_parser("compare", help="routed vs dense at matched active budget")
    _add_common(p)
    p.add_argument("--target", help="built-in target name")
    p.add_argument("--widths", help="comma-separated expert widths")
    p.add_argument("--grid", type=int, default=None)

    p = sub.add_parser("gadgets", help="bit-level cell-indicator checks")
    _add_common(p)
    p.add_argument("--cells", type=int, default=None, help="number of cells")
    p.add_argument("--points", type=int, default=None, help="random sample count")

    p = sub.add_parser("show", help="summarize a serialized network file")
    p.add_argument("path", type=Path, help="network JSON file")

    return parser


def _config_from_args(args: argparse.Namespace) -> dict:
    data: dict = {}
    if args.config is not None:
        data.update(load_config(args.config))
    kind = _KIND_BY_COMMAND[args.command]
    if "kind" in data and data["kind"] != kind:
        raise ConfigError(
            f"config file says kind={data['kind']!r} but the "
            f"'{args.command}' command runs {kind!r}"
        )
    data["kind"] = kind

    if args.seed is not None:
        data["seed"] = args.seed
    if getattr(args, "target", None):
        data["target"] = {"name": args.target}
    if getattr(args, "width", None) is not None:
        data["expert_width"] = args.width
    if getattr(args, "widths", None):
        data["widths"] = _parse_widths(args.widths)
    if getattr(args, "grid", None) is not None:
        data["grid"] = args.grid
    if getattr(args, "construction", None):
        data["construction"] = args.construction
    if getattr(args, "chart_mode", None):
        data["chart_mode"] = args.chart_mode
    if getattr(args, "cells", None) is not None:
        data["cells"] = args.cells
    if getattr(args, "points", None) is not None:
        data["points"] = args.points
    if args.no_figures:
        data["figures"] = False
    return data


def _show(path: Path) -> int:
    net = load_network(path)
    if isinstance(net, MoeNetwork):
        print(f"routed network: {net.input_dim} -> {net.output_dim}, {net.depth} layers")
        print(f"  embedding: {'yes' if net.embed is not None else 'no'}")
        print(f"  readout:   {'yes' if net.readout is not None else 'no'}")
        for i, layer in enumerate(net.layers):
            widths = sorted({e.width for e in layer.experts})
            print(
                f"  layer {i}: {len(layer.experts)} experts, k={layer.k}, "
                f"expert widths {widths}"
            )
        print(f"  active params per pass: {active_param_count(net)}")
    else:
        print(
            f"dense network: {net.input_dim} -> {net.output_dim}, "
            f"depth {net.depth}, hidden widths {list(net.hidden_widths)}"
        )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "show":
            return _show(args.path)
        data = _config_from_args(args)
        out_dir = args.out if args.out is not None else Path(f"out-{args.command}")
        cfg = experiment_config(data, out_dir)
        bundle = run_experiment(cfg)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return 1

    status = "PASS" if bundle.passed else "FAIL"
    print(f"[{status}] {cfg.kind} -> {bundle.out_dir}")
    for key, value in bundle.summary.items():
        print(f"  {key}: {value}")
    return 0 if bundle.passed else 1


if __name__ == "__main__":
    sys.exit(main())
