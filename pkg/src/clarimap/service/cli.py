"""Command line entry points.

Every subcommand reads an optional flat config file plus flags, prints
its result to stdout (JSON where the output is structured), and exits 0
on success, 1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .. import mrl
from ..corpus import dedup, load_tsv, split_stats, write_tsv, SplitSet
from ..dialogue import (
    build_dialogue_corpus,
    default_entropy_threshold,
    filter_annotation_tasks,
    load_dialogue_jsonl,
    write_dialogue_jsonl,
)
from ..metrics import approx_randomization, f1_report
from ..model.checkpoint import load_model, save_model
from ..model.config import ModelConfig
from ..model.decoding import beam_search, decode_greedy, decode_greedy_batch
from ..model.training import train_supervised
from ..runconfig import config_from_file, format_runconfig, parse_runconfig
from ..uncertainty import char_entropy_rows, make_clarification
from .app import create_app
from .finetune import eval_model, finetune_on_feedback
from .store import TaskStore, load_tasks_jsonl, write_tasks_jsonl
from ..dialogue import load_feedback_jsonl

__all__ = ["main"]


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


@click.group()
def main():
    """Map-query parsing with clarification questions and feedback learning."""


@main.command("dedup")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--dev", "dev_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def dedup_cmd(train_path, dev_path, test_path, out_dir):
    """Drop dev/test examples whose masked template appears in train."""
    try:
        splits = SplitSet(
            train=tuple(load_tsv(train_path)),
            dev=tuple(load_tsv(dev_path)),
            test=tuple(load_tsv(test_path)),
        )
        result = dedup(splits)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_tsv(out / "train.tsv", list(result.splits.train))
        write_tsv(out / "dev.tsv", list(result.splits.dev))
        write_tsv(out / "test.tsv", list(result.splits.test))
        stats = split_stats(result.splits)
        (out / "stats.json").write_text(stats.json_lines(), encoding="utf-8")
        click.echo(stats.format_table())
        click.echo(f"removed {result.removed_dev} dev, {result.removed_test} test")
    except (OSError, ValueError) as e:
        raise _fail(str(e))


def _overrides(pairs: tuple[str, ...]) -> dict:
    merged: dict = {}
    for pair in pairs:
        merged.update(parse_runconfig(pair))
    return merged


@main.command("train")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--dev", "dev_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--set", "set_pairs", multiple=True, help="Config override, e.g. --set epochs=20")
@click.option("--trace", "trace_path", type=click.Path())
def train_cmd(train_path, dev_path, out_path, config_path, set_pairs, trace_path):
    """Train a question-to-parse model and save a checkpoint."""
    try:
        config = config_from_file(config_path, **_overrides(set_pairs))
        corpus = [((ex.question,), ex.gold) for ex in load_tsv(train_path)]
        dev = None
        if dev_path:
            dev = [((ex.question,), ex.gold) for ex in load_tsv(dev_path)]
        model = train_supervised(corpus, config, dev=dev, trace_path=trace_path)
        save_model(out_path, model)
        click.echo(format_runconfig(model.config), nl=False)
        click.echo(f"saved {out_path}")
    except (OSError, ValueError, RuntimeError) as e:
        raise _fail(str(e))


@main.command("parse")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--query", required=True)
@click.option("--clarify", is_flag=True, help="Include a clarification question.")
@click.option("--beam", default=2, show_default=True)
def parse_cmd(model_path, query, clarify, beam):
    """Parse one query to JSON {parse, keyvals[, clarification]}."""
    try:
        model = load_model(model_path)
        sources = tuple([query] * model.config.n_encoders)
        beams = beam_search(model, sources, max(beam, 2 if clarify else 1))
        hyp = beams[0]
        out = {
            "parse": hyp.text,
            "logprob": hyp.logprob,
            "keyvals": mrl.keyval_spans(hyp.text),
        }
        if clarify:
            clar = make_clarification(beams)
            out["clarification"] = None if clar is None else {
                "question": clar.question,
                "token": clar.token,
                "alternative": clar.alternative,
                "span": list(clar.span),
            }
        click.echo(json.dumps(out, ensure_ascii=False, indent=2))
    except (OSError, ValueError) as e:
        raise _fail(str(e))


@main.command("gen-dialogues")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--dev", "dev_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def gen_dialogues_cmd(model_path, train_path, dev_path, test_path, out_dir):
    """Decode, clarify, and answer from gold; write dialogue JSONL per split."""
    try:
        model = load_model(model_path)
        splits = SplitSet(
            train=tuple(load_tsv(train_path)),
            dev=tuple(load_tsv(dev_path)),
            test=tuple(load_tsv(test_path)),
        )
        recs = build_dialogue_corpus(model, splits)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, records, source in (
            ("train", recs.train, splits.train),
            ("dev", recs.dev, splits.dev),
            ("test", recs.test, splits.test),
        ):
            write_dialogue_jsonl(records, out / f"{name}.jsonl")
            click.echo(f"{name}: {len(records)} of {len(source)} examples kept")
    except (OSError, ValueError) as e:
        raise _fail(str(e))


def _eval_rows(model, data_path, dialogues_path):
    if dialogues_path:
        records = load_dialogue_jsonl(dialogues_path)
        n = model.config.n_encoders
        return [((r.question, r.hypothesis, r.dialogue, r.logged_answer or "")[:n], r.target)
                for r in records], [r.id for r in records]
    examples = load_tsv(data_path)
    sources = [tuple([ex.question] * model.config.n_encoders) for ex in examples]
    return [(s, ex.gold) for s, ex in zip(sources, examples)], [ex.id for ex in examples]


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", type=click.Path(exists=True))
@click.option("--dialogues", "dialogues_path", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
@click.option("--per-example", "per_example_path", type=click.Path())
def eval_cmd(model_path, data_path, dialogues_path, as_json, per_example_path):
    """Exact match and F1 on a TSV corpus or dialogue JSONL."""
    if bool(data_path) == bool(dialogues_path):
        raise click.UsageError("pass exactly one of --data / --dialogues")
    try:
        model = load_model(model_path)
        rows, ids = _eval_rows(model, data_path, dialogues_path)
        hyps = decode_greedy_batch(model, [s for s, _ in rows])
        report = f1_report([h.text for h in hyps], [t for _, t in rows])
        if per_example_path:
            with open(per_example_path, "w", encoding="utf-8") as f:
                for id_, h, (_, target) in zip(ids, hyps, rows):
                    score = 1.0 if mrl.canonicalize(h.text) == mrl.canonicalize(target) else 0.0
                    f.write(json.dumps({"id": id_, "score": score}) + "\n")
        if as_json:
            click.echo(json.dumps(report.to_json(), indent=2))
        else:
            click.echo(report.format_table(Path(model_path).stem))
    except (OSError, ValueError) as e:
        raise _fail(str(e))


@main.command("significance")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True))
@click.option("--rounds", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def significance_cmd(a_path, b_path, rounds, seed):
    """Paired approximate-randomization p-value over per-example scores."""
    try:
        def scores(path):
            rows = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
            return {str(r["id"]): float(r["score"]) for r in rows}
        sa, sb = scores(a_path), scores(b_path)
        if set(sa) != set(sb):
            raise ValueError("per-example files cover different example ids")
        keys = sorted(sa)
        p = approx_randomization([sa[k] for k in keys], [sb[k] for k in keys],
                                 rounds=rounds, seed=seed)
        click.echo(json.dumps({"p_value": p, "pairs": len(keys)}))
    except (OSError, ValueError) as e:
        raise _fail(str(e))


@main.command("entropy-dump")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--query", required=True)
@click.option("--out", "out_path", type=click.Path())
def entropy_dump_cmd(model_path, query, out_path):
    """Per-character decoder entropy as CSV (char, position, entropy)."""
    try:
        model = load_model(model_path)
        hyp = decode_greedy(model, tuple([query] * model.config.n_encoders))
        rows = char_entropy_rows(hyp)
        target = open(out_path, "w", newline="", encoding="utf-8") if out_path else sys.stdout
        try:
            writer = csv.writer(target)
            writer.writerow(["char", "position", "entropy"])
            for ch, pos, ent in rows:
                writer.writerow([ch, pos, f"{ent:.6f}"])
        finally:
            if out_path:
                target.close()
    except (OSError, ValueError) as e:
        raise _fail(str(e))


@main.command("filter-tasks")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--tau", type=float, help="Entropy threshold; omit to derive from --dev.")
@click.option("--dev", "dev_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def filter_tasks_cmd(model_path, data_path, tau, dev_path, out_path):
    """Keep wrong or uncertain parses as annotation tasks."""
    if tau is None and dev_path is None:
        raise click.UsageError("pass --tau or --dev to derive the threshold")
    try:
        model = load_model(model_path)
        examples = load_tsv(data_path)
        if tau is None:
            tau = default_entropy_threshold(model, load_tsv(dev_path))
            click.echo(f"derived tau={tau:.6f} from {dev_path}", err=True)
        tasks = filter_annotation_tasks(model, examples, tau)
        write_tasks_jsonl(tasks, out_path)
        click.echo(json.dumps({"tau": tau, "examples": len(examples), "tasks": len(tasks)}))
    except (OSError, ValueError) as e:
        raise _fail(str(e))


@main.command("serve")
@click.option("--model", "model_path", type=click.Path(exists=True))
@click.option("--tasks", "tasks_path", type=click.Path(exists=True))
@click.option("--feedback", "feedback_path", type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve_cmd(model_path, tasks_path, feedback_path, host, port):
    """Serve the /v1 HTTP API."""
    if tasks_path and not feedback_path:
        raise click.UsageError("--tasks requires --feedback")
    try:
        import uvicorn

        app = create_app(model=model_path, tasks_path=tasks_path, feedback_path=feedback_path)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, ValueError) as e:
        raise _fail(str(e))


@main.command("finetune")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True))
@click.option("--feedback", "feedback_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--heldout", "heldout_path", type=click.Path(exists=True))
@click.option("--lr", default=0.1, show_default=True)
@click.option("--epochs", default=5, show_default=True)
@click.option("--batch-size", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True)
def finetune_cmd(model_path, tasks_path, feedback_path, out_path, heldout_path,
                 lr, epochs, batch_size, seed):
    """Reward-weighted fine-tuning on logged marking feedback."""
    try:
        model = load_model(model_path)
        tasks = load_tasks_jsonl(tasks_path)
        feedback = load_feedback_jsonl(feedback_path)
        heldout = []
        if heldout_path:
            heldout = [
                (tuple([ex.question] * model.config.n_encoders), ex.gold)
                for ex in load_tsv(heldout_path)
            ]
        report = finetune_on_feedback(
            model, feedback, tasks, heldout=heldout,
            learning_rate=lr, epochs=epochs, batch_size=batch_size, seed=seed,
        )
        save_model(out_path, model)
        payload = {"examples": report.examples, "saved": str(out_path)}
        if report.before is not None:
            payload["before"] = report.before.to_json()
            payload["after"] = report.after.to_json()
        click.echo(json.dumps(payload, indent=2))
    except (OSError, ValueError, KeyError) as e:
        raise _fail(str(e))
