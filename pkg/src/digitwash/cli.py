"""Command-line entry points.

Every command takes ``--config`` (JSON run configuration) plus optional
``--seed`` / ``--out`` / ``--format`` overrides. Exit codes: 1 for
validation failures, 2 for estimation failures; failures also emit a
machine-readable ``error.json`` in the output directory. Verbosity is
controlled by the DIGITWASH_LOG environment variable.
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click

from . import pipeline
from .errors import EstimationError, ValidationError


def _setup_logging():
    level = os.environ.get("DIGITWASH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(config, seed, out, fmt):
    overrides = {"seed": seed, "outdir": out}
    if fmt:
        overrides["formats"] = list(fmt)
    try:
        return pipeline.RunConfig.from_file(config, overrides)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad config {config}: {exc}") from exc


def _fail(cfg, exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    try:
        os.makedirs(cfg.outdir, exist_ok=True)
        with open(os.path.join(cfg.outdir, "error.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
    except OSError:
        pass
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _run(stage_fn, config, seed, out, fmt):
    _setup_logging()
    try:
        cfg = _load_config(config, seed, out, fmt)
    except ValidationError as exc:
        click.echo(json.dumps({"error": "ValidationError", "message": str(exc)}),
                   err=True)
        sys.exit(1)
    try:
        stage_fn(cfg)
    except (ValidationError, KeyError, FileNotFoundError) as exc:
        _fail(cfg, exc, 1)
    except EstimationError as exc:
        _fail(cfg, exc, 2)


def _stage_options(fn):
    fn = click.option("--config", required=True, type=click.Path(),
                      help="Run configuration JSON.")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Override the resampling seed.")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Override the output directory.")(fn)
    fn = click.option("--format", "fmt", multiple=True,
                      type=click.Choice(["csv", "markdown", "latex"]),
                      help="Override output formats (repeatable).")(fn)
    return fn


@click.group()
def main():
    """Words-vs-deeds digital transformation gap and crash-risk pipeline."""


def _make_command(name, stage_fn, help_text):
    @main.command(name=name, help=help_text)
    @_stage_options
    def _cmd(config, seed, out, fmt):
        _run(stage_fn, config, seed, out, fmt)
    return _cmd


_make_command("synth", pipeline.stage_synth,
              "Generate the seeded synthetic data bundle.")
_make_command("ingest", pipeline.stage_ingest,
              "Load, validate, and filter the firm-year file.")
_make_command("text", pipeline.stage_text,
              "Scan the MD&A corpus into text metrics.")
_make_command("crash", pipeline.stage_crash,
              "Compute crash-risk measures from weekly returns.")
_make_command("gdt", pipeline.stage_gdt,
              "Build the words-vs-deeds gap measures.")
_make_command("regress", pipeline.stage_regress,
              "Estimate the regression menu on the assembled panel.")
_make_command("tests", pipeline.stage_tests,
              "Run the between-group and subgroup difference tests.")
_make_command("report", pipeline.stage_report,
              "Render stored results as tables.")


@main.command(name="run-all", help="Execute the full pipeline end to end.")
@_stage_options
@click.option("--no-synth", is_flag=True,
              help="Use the configured input paths instead of generating data.")
def run_all(config, seed, out, fmt, no_synth):
    _run(lambda cfg: pipeline.run_all(cfg, with_synth=not no_synth),
         config, seed, out, fmt)


if __name__ == "__main__":
    main()
