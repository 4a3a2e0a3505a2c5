import sys
import logging
import argparse
from dataclasses import dataclass, fields
from typing import Optional

from divbound.backend.services.bound_pipeline import BoundPipeline
from divbound.backend.utils import config as settings
from divbound.backend.utils.csv_io import read_json
from divbound.backend.utils.errors import DivboundError, InputFormatError
from divbound.backend.utils.text_utils import format_number, parse_grid, parse_range_override

logger = logging.getLogger(__name__)

COMMANDS = ("cgf", "bound", "vajda", "pinsker", "oracle-check", "varrep-check")

DEFAULT_GRIDS = {
    "t": "-10:10:0.25",
    "eps": "0:1:0.05",
    "vajda_eps": "0:1.9:0.05",
}

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_CHECK_FAILED = 2


@dataclass
class RunConfig:
    """One CLI invocation; grids stay as text until validate()."""
    command: str
    spec: str = "kl"
    alpha: Optional[float] = None
    dist: Optional[str] = None
    g: Optional[str] = None
    t: Optional[str] = None
    eps: Optional[str] = None
    w: Optional[str] = None
    range_override: Optional[str] = None
    out: Optional[str] = None
    format: str = "csv"
    seed: int = 0
    trials: int = 50
    kind: str = "optimal"
    z: Optional[str] = None
    dist_out: Optional[str] = None
    absolute: bool = False
    verbose: bool = False

    @classmethod
    def from_json(cls, path, **overrides):
        """Load a config file; keyword overrides (None ignored) win over file values."""
        payload = read_json(path)
        if not isinstance(payload, dict):
            raise InputFormatError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise InputFormatError(f"{path}: unknown config keys {', '.join(sorted(unknown))}")
        merged = {**payload, **{k: v for k, v in overrides.items() if v is not None}}
        if "command" not in merged:
            raise InputFormatError(f"{path}: config needs a 'command'")
        return cls(**merged)

    def validate(self):
        if self.command not in COMMANDS:
            raise InputFormatError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.format not in ("csv", "json"):
            raise InputFormatError(f"--format must be csv or json, got {self.format!r}")
        if self.command in ("cgf", "bound") and not self.dist:
            raise InputFormatError(f"{self.command} needs --dist (inline family or CSV path)")
        if self.command == "vajda" and self.eps and self.w:
            raise InputFormatError("vajda takes either --eps or --w, not both")
        if self.command == "pinsker" and not self.kind:
            raise InputFormatError("pinsker needs --kind crude|optimal|concave")
        if int(self.trials) < 1:
            raise InputFormatError("--trials must be at least 1")
        for name in ("t", "eps", "w", "z"):
            text = getattr(self, name)
            if text is not None:
                parse_grid(text)
        return self

    def grid(self, name, default=None):
        text = getattr(self, name)
        if text is None:
            text = DEFAULT_GRIDS.get(default or name)
        return None if text is None else parse_grid(text)


# ------------------------------------------------------------------------------
# Command handlers
# ------------------------------------------------------------------------------
def _override(cfg):
    return parse_range_override(cfg.range_override) if cfg.range_override else None


def _handle_cgf(pipeline, cfg):
    spec = pipeline.load_spec(cfg.spec, cfg.alpha)
    dist = pipeline.load_dist(cfg.dist, cfg.g)
    return pipeline.run_cgf(spec, dist, cfg.grid("t"), _override(cfg), cfg.out, cfg.format, cfg.dist_out)


def _handle_bound(pipeline, cfg):
    spec = pipeline.load_spec(cfg.spec, cfg.alpha)
    dist = pipeline.load_dist(cfg.dist, cfg.g)
    return pipeline.run_bound(
        spec, dist, cfg.grid("t"), cfg.grid("eps"), _override(cfg),
        absolute=cfg.absolute, out=cfg.out, fmt=cfg.format, dist_out=cfg.dist_out,
    )


def _handle_vajda(pipeline, cfg):
    spec = pipeline.load_spec(cfg.spec, cfg.alpha)
    if cfg.w is not None:
        return pipeline.run_vajda(spec, ws=cfg.grid("w"), out=cfg.out, fmt=cfg.format)
    return pipeline.run_vajda(spec, eps_grid=cfg.grid("eps", "vajda_eps"), out=cfg.out, fmt=cfg.format)


def _handle_pinsker(pipeline, cfg):
    spec = pipeline.load_spec(cfg.spec, cfg.alpha)
    return pipeline.run_pinsker(spec, cfg.kind, cfg.grid("z"), cfg.out)


def _handle_oracle_check(pipeline, cfg):
    spec = pipeline.load_spec(cfg.spec, cfg.alpha)
    return pipeline.run_oracle_check(spec, seed=int(cfg.seed), trials=int(cfg.trials), out=cfg.out)


def _handle_varrep_check(pipeline, cfg):
    spec = pipeline.load_spec(cfg.spec, cfg.alpha)
    return pipeline.run_varrep_check(spec, seed=int(cfg.seed), trials=int(cfg.trials), out=cfg.out)


HANDLERS = {
    "cgf": _handle_cgf,
    "bound": _handle_bound,
    "vajda": _handle_vajda,
    "pinsker": _handle_pinsker,
    "oracle-check": _handle_oracle_check,
    "varrep-check": _handle_varrep_check,
}


def summarize(results):
    """One-line summary of a results dict."""
    command, spec = results["command"], results["spec"]
    if command == "cgf":
        text = (f"cgf {spec}: {results['finite']}/{results['samples']} finite samples, "
                f"K in [{format_number(results['k_min'])}, {format_number(results['k_max'])}], "
                f"{results['classification_hint']}")
    elif command == "bound":
        text = (f"bound {spec}: {results['eps_count']} eps values, "
                f"L in [{format_number(results['l_min'])}, {format_number(results['l_max'])}], "
                f"{results['boundary_flags']} boundary flagged")
    elif command == "vajda":
        text = (f"vajda {spec}: {results['count']} {results['curve_kind']} samples in "
                f"[{format_number(results['min'])}, {format_number(results['max'])}]")
    elif command == "pinsker":
        verdict = "holds" if results["holds"] else f"fails at z={format_number(results['violating_z'])}"
        text = f"pinsker {spec} ({results['kind']}): {verdict}, constant {format_number(results['constant'])}"
    elif command == "oracle-check":
        text = (f"oracle-check {spec}: {results['agreements']}/{results['trials']} agreements, "
                f"{results['skipped']} boundary skipped, max diff {format_number(results['max_diff'])}")
    else:
        text = (f"varrep-check {spec}: {results['agreements']}/{results['trials']} within "
                f"{format_number(results['tolerance'])}, max gap {format_number(results['max_gap'])}")
    if results.get("out"):
        text += f" -> {results['out']}"
    return text


def run(cfg, pipeline=None):
    """
    Execute a RunConfig.

    Returns:
        0 on success, 2 when a check fails, 1 on input errors
    """
    try:
        cfg.validate()
        pipeline = pipeline or BoundPipeline()
        results = HANDLERS[cfg.command](pipeline, cfg)
    except DivboundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except Exception as e:
        logger.exception("unexpected failure in %s", cfg.command)
        print(f"error: unexpected failure ({e})", file=sys.stderr)
        return EXIT_INPUT_ERROR

    print(summarize(results))
    if results.get("passed") is False:
        return EXIT_CHECK_FAILED
    return EXIT_OK


# ------------------------------------------------------------------------------
# Argument parsing
# ------------------------------------------------------------------------------
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--spec", help="catalog id (kl, chi2, alpha, ...) or JSON descriptor path")
    common.add_argument("--alpha", type=float, help="parameter of alpha / chi_alpha")
    common.add_argument("--dist", help="inline distribution (uniform:-1,1, gaussian:0,1, ...) or CSV path")
    common.add_argument("--g", help="function CSV (point_id,value); --dist is then a measure CSV")
    common.add_argument("--t", help="t grid, lo:hi:step or a comma list")
    common.add_argument("--eps", help="eps grid")
    common.add_argument("--w", help="width grid (vajda height curve)")
    common.add_argument("--z", help="z grid for pinsker checks")
    common.add_argument("--range-override", dest="range_override", help="essential range lo,hi (inf allowed)")
    common.add_argument("--out", help="output file")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--kind", choices=("crude", "optimal", "concave"))
    common.add_argument("--dist-out", dest="dist_out", help="also write the input distribution as x,weight CSV")
    common.add_argument("--abs", dest="absolute", action="store_const", const=True,
                        help="bound on |mu(g) - nu(g)|")
    common.add_argument("--verbose", action="store_const", const=True, help="debug logging")

    parser = argparse.ArgumentParser(
        prog="divbound",
        description="Optimal lower bounds of phi-divergences in terms of integral probability metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "cgf": "sample the (phi, nu)-cumulant generating function",
        "bound": "optimal lower bound L = K* on an eps grid",
        "vajda": "tight bound in terms of total variation (or height curve with --w)",
        "pinsker": "check a Pinsker-type sufficient condition",
        "oracle-check": "compare conjugate bounds with the brute-force oracle",
        "varrep-check": "variational representation witness check",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args):
    values = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    if args.config:
        return RunConfig.from_json(args.config, **values)
    return RunConfig(**{k: v for k, v in values.items() if v is not None})


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, settings.log_level(), logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except DivboundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except TypeError as e:
        print(f"error: bad config ({e})", file=sys.stderr)
        return EXIT_INPUT_ERROR
    return run(cfg)
