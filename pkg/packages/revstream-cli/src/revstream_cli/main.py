#!/usr/bin/env python3
"""
revstream command line: render, build-data, simulate, cost, validate.

Program output goes to stdout (program text, JSON records or CSV); logs go to stderr.
"""

import argparse
import json
import logging
import shlex
import sys
from collections.abc import Callable, Sequence
from enum import IntEnum
from pathlib import Path
from typing import Any, NoReturn

from dotenv import load_dotenv
from pydantic import ValidationError
from revstream_core.audit import BalanceChecker, Checker, ExternalChecker, StabilityMatrix, stability_matrix
from revstream_core.cost import cost_agent, cost_sor
from revstream_core.episode import detokenize, serialize, tokenize, tokenize_stream
from revstream_core.errors import ExternalCheckerUnavailable, GrammarError, InvalidScript, ScopeNotFound
from revstream_core.harness import (
    Policy,
    ScriptedPolicy,
    ScriptFormat,
    StochasticPolicy,
    WeightTable,
    decode_session,
    load_script,
    scaling_experiment,
    write_scaling_csv,
)
from revstream_core.logging import setup_logging
from revstream_core.models import Backend, RenderMode, TokenizerProfile
from revstream_core.records import read_records
from revstream_core.renderer import draft_buffer, events_to_jsonl, render
from revstream_core.utils import env_bool, read_text, write_text
from revstream_forge.corpus import parse_ratio
from revstream_forge.pipeline import BuildConfig, build_dataset
from revstream_forge.tiers import TierSelection
from tqdm import tqdm

from revstream_cli.config import RunConfig, resolve_config


class ExitCode(IntEnum):
    OK = 0
    IO_ERROR = 1
    GRAMMAR_ERROR = 2
    EMPTY_DATASET = 3
    INVALID_SCRIPT = 4
    CHECKER_UNAVAILABLE = 5
    USAGE_ERROR = 64
    CONFIG_ERROR = 78


class CliParser(argparse.ArgumentParser):
    """Reports usage errors with their own exit code, apart from grammar errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE_ERROR, f"{self.prog}: error: {message}\n")


def cmd_render(args: argparse.Namespace, config: RunConfig) -> ExitCode:
    stream = tokenize_stream(read_text(args.input), config.profile)
    result = render(stream, mode=config.mode, backend=config.backend)
    if args.events_out:
        write_text(args.events_out, events_to_jsonl(result.events))
    sys.stdout.write(detokenize(result.buffer))
    return ExitCode.OK


def cmd_build_data(args: argparse.Namespace, config: RunConfig) -> ExitCode:
    build_config = BuildConfig(
        tier=args.tier,
        latency_k=config.latency_k,
        seed=config.seed,
        profile=config.profile,
        merge_gap=args.merge_gap,
        latency_fallback=args.latency_fallback,
        ratio=parse_ratio(args.ratio) if args.ratio else None,
        workers=config.workers,
    )
    summary = build_dataset(args.pairs, args.out, build_config, args.general)

    summary_json = summary.model_dump_json()
    if args.summary_out:
        write_text(args.summary_out, summary_json + "\n")
    print(summary_json)

    if summary.emitted == 0:
        logging.error("No records were emitted")
        return ExitCode.EMPTY_DATASET
    return ExitCode.OK


def _policy(args: argparse.Namespace, config: RunConfig) -> Policy:
    if args.policy == "stochastic":
        if not args.weights:
            raise ValueError("--weights is required for a stochastic policy")
        weights = WeightTable.model_validate_json(read_text(args.weights))
        return StochasticPolicy(weights, seed=config.seed)
    return ScriptedPolicy(load_script(Path(args.policy), args.policy_format, config.profile))


def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> ExitCode:
    prefix = tokenize(read_text(args.prefix), config.profile) if args.prefix else ()
    session = decode_session(
        _policy(args, config),
        bias=args.bias,
        enforce_mask=args.mask == "on",
        context_len=args.L,
        mode=config.mode,
        backend=config.backend,
        prefix=prefix,
    )
    if args.out:
        write_text(args.out, detokenize(session.buffer))
    if args.events_out:
        write_text(args.events_out, events_to_jsonl(session.events))
    print(session.cost.model_dump_json())
    return ExitCode.OK


def cmd_cost(args: argparse.Namespace, config: RunConfig) -> ExitCode:
    if args.scaling:
        L_values = [int(v) for v in args.scaling.split(",") if v.strip()]
        rows = scaling_experiment(L_values, args.Nv, args.Ns, workers=config.workers)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as f:
                write_scaling_csv(rows, f)
        else:
            write_scaling_csv(rows, sys.stdout)
        return ExitCode.OK

    if args.agent:
        report = cost_agent(args.L, args.Nv, args.Ns, steps=args.agent, loc_output=args.loc_output, overhead_prompts=args.critic_prompt)
    else:
        report = cost_sor(args.L, args.Ns)

    output = report.model_dump_json()
    if args.out:
        write_text(args.out, output + "\n")
    print(output)
    return ExitCode.OK


def _checker(spec: str) -> Checker:
    if spec == "builtin":
        return BalanceChecker()
    if spec.startswith("cmd:"):
        return ExternalChecker(shlex.split(spec.removeprefix("cmd:")))
    raise ValueError(f"Unknown checker {spec!r}, expected builtin or cmd:<command>")


def _matrix_record(matrix: StabilityMatrix) -> dict:
    return {
        **{label.value: count for label, count in matrix.counts.items()},
        "total": matrix.total,
        "non_destructive_rate": matrix.non_destructive_rate,
        "revision_rate": matrix.revision_rate,
    }


def cmd_validate(args: argparse.Namespace, config: RunConfig) -> ExitCode:
    if args.dataset:
        pairs = []
        for record in tqdm(read_records(args.dataset), desc="Rendering records"):
            pre = detokenize(draft_buffer(record.trajectory))
            post = detokenize(render(serialize(record.trajectory), backend=config.backend).buffer)
            pairs.append((pre, post))
    elif args.pre and args.post:
        pairs = [(read_text(args.pre), read_text(args.post))]
    else:
        raise ValueError("validate needs --dataset or both --pre and --post")

    matrix = stability_matrix(pairs, _checker(args.checker), workers=config.workers, total_samples=args.total_samples)
    print(json.dumps(_matrix_record(matrix)))
    return ExitCode.OK


def add_common_options(parser: argparse.ArgumentParser, default: Any) -> None:
    """Flags accepted both before and after the sub-command."""
    verbose_default = False if default is None else default
    parser.add_argument("--seed", type=int, default=default, help="Seed for randomized stages (env REVSTREAM_SEED)")
    parser.add_argument("--profile", choices=[p.value for p in TokenizerProfile], default=default, help="Tokenizer profile (env REVSTREAM_PROFILE)")
    parser.add_argument("--mode", choices=[m.value for m in RenderMode], default=default, help="Grammar handling (env REVSTREAM_MODE)")
    parser.add_argument("--backend", choices=[b.value for b in Backend], default=default, help="Substring index backend")
    parser.add_argument("--workers", type=int, default=default, help="Parallel workers (default: available CPUs)")
    parser.add_argument("--config", type=str, default=default, help="TOML config file with a [revstream] table")
    parser.add_argument("--verbose", "-v", action="store_true", default=verbose_default, help="Enable debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="revstream", description="Single-pass revision decoding toolkit")
    add_common_options(parser, None)
    # Unset sub-command flags must not overwrite values given before the sub-command.
    common = argparse.ArgumentParser(add_help=False)
    add_common_options(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", parents=[common], help="Render a trajectory file to the final program text")
    p.add_argument("input", type=Path)
    p.add_argument("--events-out", type=Path)
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser("build-data", parents=[common], help="Build trajectory records from function pairs")
    p.add_argument("--pairs", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--tier", type=TierSelection, choices=list(TierSelection), default=TierSelection.BOTH)
    p.add_argument("--latency-k", dest="latency_k", type=int, default=None)
    p.add_argument("--lambda", dest="ratio", default=None, help="Revision:general mixing ratio, e.g. 1:3")
    p.add_argument("--general", type=Path, default=None)
    p.add_argument("--summary-out", type=Path, default=None)
    p.add_argument("--merge-gap", type=int, default=0)
    p.add_argument("--latency-fallback", action="store_true", help="Retry unresolvable scopes at latency 0 instead of skipping")
    p.set_defaults(handler=cmd_build_data)

    p = sub.add_parser("simulate", parents=[common], help="Run one decoding session")
    p.add_argument("--policy", required=True, help="Script file, or 'stochastic'")
    p.add_argument("--policy-format", type=ScriptFormat, choices=list(ScriptFormat), default=ScriptFormat.LINES)
    p.add_argument("--weights", type=Path, default=None)
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--mask", choices=["on", "off"], default="on")
    p.add_argument("--L", type=int, default=0)
    p.add_argument("--prefix", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--events-out", type=Path, default=None)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("cost", parents=[common], help="Token cost models and the scaling table")
    p.add_argument("--L", type=int, default=0)
    p.add_argument("--Nv", type=int, default=0)
    p.add_argument("--Ns", type=int, default=0)
    p.add_argument("--agent", type=int, choices=[3, 4], default=None)
    p.add_argument("--loc-output", type=int, default=0)
    p.add_argument("--critic-prompt", type=int, action="append", default=[])
    p.add_argument("--scaling", default=None, help="Comma-separated increasing L values")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(handler=cmd_cost)

    p = sub.add_parser("validate", parents=[common], help="Stability matrix of pre/post revision programs")
    p.add_argument("--pre", type=Path)
    p.add_argument("--post", type=Path)
    p.add_argument("--dataset", type=Path)
    p.add_argument("--checker", default="builtin", help="builtin or cmd:<command>")
    p.add_argument("--total-samples", type=int, default=None)
    p.set_defaults(handler=cmd_validate)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return ExitCode.OK if e.code is None else int(e.code)

    verbose = args.verbose or env_bool("REVSTREAM_VERBOSE")
    try:
        config = resolve_config(args)
    except (ValidationError, OSError, ValueError) as e:
        setup_logging(verbose)
        logging.error(f"Invalid configuration: {e}")
        return ExitCode.CONFIG_ERROR

    setup_logging(verbose, config.log_file)
    logging.info(f"Resolved config: {config.model_dump_json()}")

    handler: Callable[[argparse.Namespace, RunConfig], ExitCode] = args.handler
    try:
        return int(handler(args, config))
    except GrammarError as e:
        logging.error(f"Grammar error: {e}")
        return ExitCode.GRAMMAR_ERROR
    except ScopeNotFound as e:
        logging.error(f"Grammar error: {e}")
        return ExitCode.GRAMMAR_ERROR
    except InvalidScript as e:
        logging.error(f"Invalid script: {e}")
        return ExitCode.INVALID_SCRIPT
    except ExternalCheckerUnavailable as e:
        logging.error(str(e))
        return ExitCode.CHECKER_UNAVAILABLE
    except OSError as e:
        logging.error(f"I/O error: {e}")
        return ExitCode.IO_ERROR
    except ValueError as e:
        logging.error(f"Invalid input: {e}")
        return ExitCode.IO_ERROR


def main() -> None:
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        logging.info("Process interrupted by user.")
        sys.exit(1)


if __name__ == "__main__":
    main()
