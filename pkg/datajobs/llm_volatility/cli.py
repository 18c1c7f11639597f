# native Python packages
import os
from typing import Callable, Dict, List, Optional, Tuple

# third-party packages
import click

# custom packages
from datajobs.llm_volatility.artifacts import StageArtifacts
from datajobs.llm_volatility.corpus import ingest
from datajobs.llm_volatility.gateway import query
from datajobs.llm_volatility.metrics import compute_metrics
from datajobs.llm_volatility.parse import parse
from datajobs.llm_volatility.report import report
from datajobs.llm_volatility.strategy import backtest
from utils.config import PipelineConfig, load_config
from utils.errors import ConfigError
from utils.logger import get_console_logger

EXIT_CONFIG = 2

# (name, stage function, exit code on failure), in pipeline order
STAGES: List[Tuple[str, Callable[[PipelineConfig], object], int]] = [
    ("ingest", ingest, 10),
    ("query", query, 11),
    ("parse", parse, 12),
    ("metrics", compute_metrics, 13),
    ("backtest", backtest, 14),
    ("report", report, 15),
]
STAGE_BY_NAME: Dict[str, Tuple[Callable[[PipelineConfig], object], int]] = {
    name: (function, code) for name, function, code in STAGES
}


def _parse_temperatures(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from None


def stage_plan(name: str, config: PipelineConfig) -> str:
    """One line describing what a stage reads and writes."""
    artifacts = StageArtifacts(config.paths.output)
    run = config.run
    plans = {
        "ingest": f"read {config.paths.headlines} and {config.paths.prices}, write {artifacts.corpus_dir}",
        "query": (
            f"render {config.prompt.style.value} prompts, query provider `{run.provider}` model `{run.model}` "
            f"at temperatures {run.temperatures} x {run.repetitions} runs, cache {config.paths.cache}, "
            f"write {artifacts.responses_dir}"
        ),
        "parse": f"extract labels from {artifacts.responses}, write {artifacts.parsed_dir}",
        "metrics": f"compute ticker-day scores and volatility, write {artifacts.metrics_dir}",
        "backtest": (
            f"backtest every (temperature, run) with lookback {config.signal.lookback}, "
            f"write {artifacts.backtest_dir}"
        ),
        "report": f"assemble summary, write {artifacts.report_dir}",
    }
    return f"{name}: {plans[name]}"


def run_stage(ctx: click.Context, name: str):
    """Runs one stage, exiting with the stage's code on failure."""
    logger = get_console_logger(__name__)
    config: PipelineConfig = ctx.obj["config"]
    if ctx.obj["dry_run"]:
        click.echo(stage_plan(name, config))
        return

    function, exit_code = STAGE_BY_NAME[name]
    logger.info(f"Run stage. Stage: {name}.")
    try:
        function(config)
    except Exception as e:
        logger.error(f"Stage failed. Stage: {name}. Error: {type(e).__name__}. Reason: {e}")
        ctx.exit(exit_code)


@click.group()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="TOML pipeline config.")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Overrides LOG_LEVEL.",
)
@click.option("--dry-run", is_flag=True, help="Print the execution plan and exit.")
@click.option("--seed", type=int, default=None)
@click.option("--provider", type=str, default=None)
@click.option("--temperatures", type=str, default=None, callback=_parse_temperatures, help="e.g. 0,0.5,1")
@click.option("--repetitions", type=int, default=None)
@click.option("--output-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def cli(ctx, config_path, log_level, dry_run, seed, provider, temperatures, repetitions, output_dir):
    """LLM sentiment volatility benchmark."""
    if log_level:
        os.environ["LOG_LEVEL"] = log_level.upper()

    overrides = {
        "seed": seed,
        "run.provider": provider,
        "run.temperatures": temperatures,
        "run.repetitions": repetitions,
    }
    try:
        config = load_config(config_path, overrides)
    except ConfigError as e:
        get_console_logger(__name__).error(str(e))
        ctx.exit(EXIT_CONFIG)
    if output_dir is not None:
        config = config.model_copy(
            update={"paths": config.paths.model_copy(update={"output": os.path.abspath(output_dir)})}
        )
    ctx.obj = {"config": config, "dry_run": dry_run}


@cli.command("ingest")
@click.pass_context
def ingest_command(ctx):
    """Validate inputs and write the canonical corpus."""
    run_stage(ctx, "ingest")


@cli.command("query")
@click.pass_context
def query_command(ctx):
    """Render prompts and collect responses over the temperature x run grid."""
    run_stage(ctx, "query")


@cli.command("parse")
@click.pass_context
def parse_command(ctx):
    """Extract feed-level labels."""
    run_stage(ctx, "parse")


@cli.command("metrics")
@click.pass_context
def metrics_command(ctx):
    """Compute ticker-day scores and lexical and semantic volatility."""
    run_stage(ctx, "metrics")


@cli.command("backtest")
@click.pass_context
def backtest_command(ctx):
    """Backtest the long-short strategy per (temperature, run)."""
    run_stage(ctx, "backtest")


@cli.command("report")
@click.pass_context
def report_command(ctx):
    """Write the experiment summary."""
    run_stage(ctx, "report")


@cli.command("run-all")
@click.pass_context
def run_all_command(ctx):
    """Run every stage in order, stopping at the first failure."""
    for name, _, _ in STAGES:
        run_stage(ctx, name)
