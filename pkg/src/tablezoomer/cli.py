"""Command-line entry point: describe, ask, zoom-inspect, bench.

All commands are non-interactive and exit 0 on success, nonzero with a
diagnostic on stderr otherwise, so they slot into scripts and CI directly.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config
from .controller import ANSWER_TYPES, ControllerConfig, answer_question
from .describer import describe_once, table_fingerprint
from .errors import TableZoomerError
from .executor import ExecutorGateway, discover_runner
from .harness import STRATEGIES, load_corpus, run_benchmark
from .llm import CountingClient, LiveClient, LlmClient, ReplayClient, ScriptedClient
from .planner import plan as plan_query
from .refiner import zoom
from .serialize import serialize_schema
from .store import load_table

logger = logging.getLogger(__name__)


def build_llm_client(config: AppConfig) -> LlmClient:
    llm = config.llm
    if llm.mode == "live":
        return LiveClient(
            llm.endpoint_url,
            llm.model,
            api_key_env=llm.api_key_env,
            token_budget=llm.max_tokens,
        )
    if llm.mode == "replay":
        if not llm.fixture_dir:
            raise TableZoomerError("llm.mode=replay needs llm.fixture_dir")
        return ReplayClient(llm.fixture_dir, token_budget=llm.max_tokens)
    if not llm.script_path:
        raise TableZoomerError("llm.mode=scripted needs llm.script_path")
    responses = json.loads(Path(llm.script_path).read_text(encoding="utf-8"))
    return ScriptedClient(responses, token_budget=llm.max_tokens)


def build_gateway(config: AppConfig) -> ExecutorGateway:
    runner_cmd = None
    if config.executor.runner_path:
        runner_cmd = discover_runner(config.executor.runner_path)
    return ExecutorGateway(runner_cmd, timeout=config.executor.timeout)


def controller_config(config: AppConfig) -> ControllerConfig:
    return ControllerConfig(
        k=config.describer.k,
        j=config.describer.j,
        seed=config.describer.seed,
        cache_dir=config.describer.cache_dir,
        threshold=config.refiner.threshold,
        max_candidates=config.refiner.max_candidates,
        k_zoom=config.refiner.k_zoom,
        max_repairs=config.codegen.max_repairs,
        k_max=config.react.k_max,
        timeout=config.executor.timeout,
    )


def _parse_overrides(pairs: tuple[str, ...]) -> dict[str, str]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.UsageError(f"--set expects section.key=value, got {pair!r}")
        dotted, value = pair.split("=", 1)
        overrides[dotted.strip()] = value.strip()
    return overrides


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="INI config file.")
@click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
              help="Override one config value; repeatable; beats env and file.")
@click.option("--verbose", is_flag=True, help="Log at INFO level.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, overrides: tuple[str, ...], verbose: bool) -> None:
    """Table question answering via schema description, zooming, and generated programs."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr)
    try:
        ctx.obj = load_config(config_path, overrides=_parse_overrides(overrides))
    except TableZoomerError as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.argument("table_path", type=click.Path())
@click.pass_obj
def describe(config: AppConfig, table_path: str) -> None:
    """Build (or fetch from cache) the global schema for TABLE_PATH."""
    try:
        fingerprint = table_fingerprint(table_path)
        cache_file = Path(config.describer.cache_dir) / f"{fingerprint}.json"
        hit = cache_file.is_file()
        llm = CountingClient(build_llm_client(config))
        schema = describe_once(
            table_path,
            config.describer.cache_dir,
            config.describer.k,
            config.describer.j,
            config.describer.seed,
            llm,
        )
    except (TableZoomerError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    status = "cache hit, 0 LLM calls" if hit and llm.calls == 0 else f"built with {llm.calls} LLM calls"
    click.echo(f"schema: {cache_file} ({status})")
    click.echo(f"table: {schema.table_name} rows={schema.row_count} columns={schema.column_count}")
    for col in schema.columns:
        click.echo(f"  {col.name} [{col.dtype}]: {col.meaning}")


@main.command()
@click.argument("table_path", type=click.Path())
@click.argument("question")
@click.option("--answer-type", type=click.Choice(ANSWER_TYPES), default="category", show_default=True)
@click.option("--trace", is_flag=True, help="Include the full reasoning trace in the output JSON.")
@click.pass_obj
def ask(config: AppConfig, table_path: str, question: str, answer_type: str, trace: bool) -> None:
    """Answer QUESTION over TABLE_PATH and print the typed answer as JSON."""
    try:
        final = answer_question(
            table_path,
            question,
            answer_type,
            controller_config(config),
            build_llm_client(config),
            build_gateway(config),
        )
    except (TableZoomerError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    document = final.to_dict()
    if not trace:
        document.pop("trace")
    click.echo(json.dumps(document, ensure_ascii=False, indent=1))


@main.command("zoom-inspect")
@click.argument("table_path", type=click.Path())
@click.argument("question")
@click.pass_obj
def zoom_inspect(config: AppConfig, table_path: str, question: str) -> None:
    """Show the plan, the refined schema, and compression stats; no codegen."""
    try:
        llm = build_llm_client(config)
        table = load_table(table_path)
        schema = describe_once(
            table_path,
            config.describer.cache_dir,
            config.describer.k,
            config.describer.j,
            config.describer.seed,
            llm,
            table=table,
        )
        query_plan = plan_query(question, schema, llm)
        refined = zoom(
            schema,
            query_plan,
            table,
            threshold=config.refiner.threshold,
            max_candidates=config.refiner.max_candidates,
            k_zoom=config.refiner.k_zoom,
            seed=config.describer.seed,
        )
    except (TableZoomerError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    total = len(schema.columns)
    kept = len(refined.columns)
    click.echo("plan:")
    click.echo(json.dumps(query_plan.to_dict(), ensure_ascii=False, indent=1))
    click.echo("refined schema:")
    click.echo(serialize_schema(refined))
    removed_pct = 100.0 * (total - kept) / total if total else 0.0
    click.echo(f"compression: kept {kept}/{total} columns ({removed_pct:.0f}% removed)")


@main.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--strategy", type=click.Choice(STRATEGIES), default="tablezoomer", show_default=True)
@click.option("--adapter", type=str, default=None, help="Corpus adapter; defaults to harness.adapter.")
@click.option("--save-traces", is_flag=True, help="Persist per-example reasoning traces (large).")
@click.pass_obj
def bench(config: AppConfig, corpus_path: str, strategy: str, adapter: str | None, save_traces: bool) -> None:
    """Run STRATEGY over a QA corpus and write the run report."""
    try:
        corpus = load_corpus(corpus_path, adapter or config.harness.adapter)
        report = run_benchmark(
            corpus,
            strategy,
            controller_config(config),
            build_llm_client(config),
            build_gateway(config),
            parallelism=config.llm.parallelism,
            report_dir=config.harness.report_dir,
            save_traces=save_traces,
        )
    except (TableZoomerError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    click.echo(report.to_text())
    click.echo(f"report written under {config.harness.report_dir}")


if __name__ == "__main__":
    main()
