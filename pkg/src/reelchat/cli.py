"""Command-line entry points.

reelchat chat          interactive REPL with a per-turn pipeline trace
reelchat annotate      weak-supervision gold labels for a corpus file
reelchat augment       relation-preserving corpus augmentation
reelchat eval          score a predictor against an annotated corpus
reelchat validate-kb   parse + integrity-check a KB file
reelchat serve         run the HTTP session service

Exit codes: 0 ok, 1 usage, 2 validation, 3 runtime.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from typing import Optional

import click

from .datapipe import (
    CorpusError,
    annotate_corpus,
    augment as augment_dialog,
    dump_corpus,
    load_corpus,
    validate_augmentation,
)
from .engine import DialogEngine, session_to_payload
from .extract import GenrePatternSet, default_patterns
from .kb import KBError, Kind, load_kb
from .metrics import (
    EmptyPredictor,
    OraclePredictor,
    report_to_json,
    report_to_table,
    score_corpus,
)
from .predictor import ReferencePolicy
from .service import (
    ServiceConfig,
    ServiceConfigError,
    _engine_config,
    _load_kb,
    _load_patterns,
    create_app,
    load_service_config,
)

__all__ = ["cli", "main"]


def _resolve(config_path, kb_path, patterns_path, seed) -> ServiceConfig:
    config = load_service_config(config_path)
    updates = {}
    if kb_path is not None:
        updates["kb_path"] = kb_path
    if patterns_path is not None:
        updates["patterns_path"] = patterns_path
    if seed is not None:
        updates["template_seed"] = seed
    if updates:
        config = dataclasses.replace(config, **updates)
    return config


def _trace_lines(session, turn: int) -> list[str]:
    phase = session.phases[turn]
    delta = session.deltas[turn]
    if delta.entries:
        parts = sorted(
            f"{'+' if e.label.value == 'pos' else '-'}{e.attribute.kind.value}:{e.attribute.id}"
            for e in delta.entries
        )
        delta_text = ",".join(parts)
    else:
        delta_text = "(none)"
    user_tracking, system_tracking = session.latest_trackings()

    def fmt(tracking) -> str:
        if tracking is None or not tracking.entries:
            return "(none)"
        return ", ".join(
            f"{e.attribute.kind.value}:{e.attribute.id}={e.label.value}"
            for e in sorted(
                tracking.entries, key=lambda e: (e.attribute.kind.value, e.attribute.id)
            )
        )

    return [
        f"     phase={phase.value} delta={delta_text}",
        f"     user: {fmt(user_tracking)}",
        f"     system: {fmt(system_tracking)}",
    ]


@click.group()
def cli() -> None:
    """Attribute-tracking movie recommendation dialogs."""


@cli.command()
@click.option("--kb", "kb_path", type=click.Path(), default=None, help="KB jsonl file (defaults to the built-in demo KB).")
@click.option("--patterns", "patterns_path", type=click.Path(), default=None, help="Genre alias JSON file.")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Service config JSON (engine settings are honored).")
@click.option("--seed", type=int, default=None, help="Template rotation seed.")
def chat(kb_path, patterns_path, config_path, seed) -> None:
    """Interactive chat with a per-turn tracking/delta trace."""
    config = _resolve(config_path, kb_path, patterns_path, seed)
    kb = _load_kb(config)
    patterns = _load_patterns(config)
    engine = DialogEngine(kb, patterns=patterns, config=_engine_config(config))
    session = engine.new_session()
    click.echo("reelchat: say hi to start; /state dumps the session; /quit exits.")
    while True:
        try:
            line = input("you> ")
        except EOFError:
            click.echo("bot> Bye!")
            return
        line = line.strip()
        if not line:
            continue
        if line == "/quit":
            click.echo("bot> Bye!")
            return
        if line == "/state":
            click.echo(json.dumps(session_to_payload(session), ensure_ascii=False, indent=2, sort_keys=True))
            continue
        response, session = engine.step(session, line)
        click.echo(f"bot> {response.text}")
        for trace in _trace_lines(session, session.current_turn - 1):
            click.echo(trace)


@cli.command()
@click.option("--kb", "kb_path", type=click.Path(), default=None, help="KB jsonl file.")
@click.option("--patterns", "patterns_path", type=click.Path(), default=None)
@click.option("--in", "input_path", type=click.Path(), required=True, help="Corpus jsonl to annotate.")
@click.option("--out", "output_path", type=click.Path(), required=True, help="Destination jsonl.")
@click.option("--json", "as_json", is_flag=True, help="Print a JSON summary.")
def annotate(kb_path, patterns_path, input_path, output_path, as_json) -> None:
    """Derive per-turn pos/neg gold trackings from recommendation events."""
    config = _resolve(None, kb_path, patterns_path, None)
    kb = _load_kb(config)
    patterns = _load_patterns(config)
    dialogs = load_corpus(input_path)
    annotated, skipped = annotate_corpus(dialogs, kb, patterns)
    dump_corpus(annotated, output_path)
    summary = {"dialogs": len(dialogs), "annotated": len(dialogs) - len(skipped), "skipped": len(skipped)}
    if as_json:
        click.echo(json.dumps(summary, sort_keys=True))
    else:
        click.echo(
            f"annotated {summary['annotated']} of {summary['dialogs']} dialogs -> {output_path}"
        )
    for dialog_id in skipped:
        click.echo(f"skipped {dialog_id}: no recommendation events", err=True)


@cli.command()
@click.option("--kb", "kb_path", type=click.Path(), default=None, help="KB jsonl file.")
@click.option("--patterns", "patterns_path", type=click.Path(), default=None)
@click.option("--in", "input_path", type=click.Path(), required=True, help="Corpus jsonl to augment.")
@click.option("--out", "output_path", type=click.Path(), required=True, help="Destination jsonl.")
@click.option("--k", type=int, default=1, show_default=True, help="Target rewrites per dialog.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print a JSON summary.")
def augment(kb_path, patterns_path, input_path, output_path, k, seed, as_json) -> None:
    """Rewrite dialogs onto structurally equivalent KB attribute sets."""
    config = _resolve(None, kb_path, patterns_path, None)
    kb = _load_kb(config)
    patterns = _load_patterns(config)
    dialogs = load_corpus(input_path)
    outputs = []
    invalid = 0
    for dialog in dialogs:
        rewrites = augment_dialog(dialog, kb, k=k, seed=seed, patterns=patterns)
        for rewrite in rewrites:
            if not validate_augmentation(dialog, rewrite, kb, patterns):
                invalid += 1
            outputs.append(rewrite)
    dump_corpus(outputs, output_path)
    summary = {
        "dialogs": len(dialogs),
        "requested": len(dialogs) * max(k, 0),
        "generated": len(outputs),
        "invalid": invalid,
    }
    if as_json:
        click.echo(json.dumps(summary, sort_keys=True))
    else:
        click.echo(
            f"generated {summary['generated']} of {summary['requested']} requested rewrites"
            f" ({invalid} failed validation) -> {output_path}"
        )
    if invalid:
        raise CorpusError(f"{invalid} augmented dialogs failed relation validation")


@cli.command("eval")
@click.option("--kb", "kb_path", type=click.Path(), default=None, help="KB jsonl file.")
@click.option("--patterns", "patterns_path", type=click.Path(), default=None)
@click.option("--in", "input_path", type=click.Path(), required=True, help="Annotated corpus jsonl.")
@click.option(
    "--predictor",
    type=click.Choice(["reference", "oracle", "empty"]),
    default="reference",
    show_default=True,
)
@click.option("--out", "output_path", type=click.Path(), default=None, help="Write the report here instead of stdout.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of the text table.")
def eval_command(kb_path, patterns_path, input_path, predictor, output_path, as_json) -> None:
    """Score a placeholder predictor against gold annotations."""
    config = _resolve(None, kb_path, patterns_path, None)
    kb = _load_kb(config)
    patterns = _load_patterns(config)
    dialogs = load_corpus(input_path)
    if predictor == "oracle":
        backend = OraclePredictor(dialogs, kb, patterns)
    elif predictor == "empty":
        backend = EmptyPredictor()
    else:
        backend = ReferencePolicy()
    score = score_corpus(backend, dialogs, kb, patterns)
    rendered = report_to_json(score) if as_json else report_to_table(score)
    if output_path:
        with open(output_path, "w", encoding="utf-8") as handle:
            handle.write(rendered + "\n")
        click.echo(f"report -> {output_path}")
    else:
        click.echo(rendered)
    if score.skipped_dialogs:
        click.echo(f"skipped {score.skipped_dialogs} dialogs without gold", err=True)


@cli.command("validate-kb")
@click.option("--kb", "kb_path", type=click.Path(), default=None, help="KB jsonl file.")
@click.option("--json", "as_json", is_flag=True)
def validate_kb(kb_path, as_json) -> None:
    """Parse a KB file and report its contents."""
    config = _resolve(None, kb_path, None, None)
    kb = _load_kb(config)
    stats = {
        "movies": len(kb.movies),
        "titles": len(kb.attributes(Kind.TITLE)),
        "genres": len(kb.attributes(Kind.GENRE)),
        "persons": len(kb.attributes(Kind.PERSON)),
        "relations": sum(
            len(m.genres) + len(m.actors) + len(m.directors) for m in kb.movies
        ),
    }
    if as_json:
        click.echo(json.dumps(stats, sort_keys=True))
    else:
        click.echo(
            "KB ok: {movies} movies, {titles} titles, {genres} genres, "
            "{persons} persons, {relations} relations".format(**stats)
        )


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Service config JSON.")
@click.option("--kb", "kb_path", type=click.Path(), default=None, help="KB jsonl override.")
@click.option("--host", default=None, help="Bind host override.")
@click.option("--port", type=int, default=None, help="Bind port override.")
def serve(config_path, kb_path, host, port) -> None:
    """Run the HTTP session service."""
    import os

    import uvicorn

    config = load_service_config(config_path, env=os.environ)
    updates = {}
    if kb_path is not None:
        updates["kb_path"] = kb_path
    if host is not None:
        updates["host"] = host
    if port is not None:
        updates["port"] = port
    if updates:
        config = dataclasses.replace(config, **updates)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


def main(argv: Optional[list] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (KBError, CorpusError, ServiceConfigError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: map anything else to exit 3
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
