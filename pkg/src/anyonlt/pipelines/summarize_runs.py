from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Optional

import click
from tabulate import tabulate

log = logging.getLogger(__name__)

HEADERS = ["suite", "status", "pass", "fail", "skipped", "version", "run"]


def _collect_runs(runs_dir: Path, suites: Optional[List[str]] = None) -> List[dict]:
    rows = []
    for p in sorted(runs_dir.rglob("report.json")):
        try:
            r = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            log.warning("skipping %s: %s", p, exc)
            continue
        if suites and r.get("suite") not in suites:
            continue
        statuses = [c.get("status") for c in r.get("checks", [])]
        rows.append({
            "suite": r.get("suite", "?"),
            "status": r.get("status", "?"),
            "pass": statuses.count("pass"),
            "fail": statuses.count("fail"),
            "skipped": statuses.count("skipped"),
            "version": r.get("version", "?"),
            "run": str(p.parent),
            "failed": [c["name"] for c in r.get("checks", []) if c.get("status") == "fail"],
        })
    return rows


def summarize(runs_dir: str | Path, suites: Optional[List[str]] = None) -> str:
    rows = _collect_runs(Path(runs_dir), suites)
    if not rows:
        return "(no reports found)"
    parts = [tabulate([[r[h] for h in HEADERS] for r in rows], headers=HEADERS, tablefmt="github")]
    for r in rows:
        if r["failed"]:
            parts.append(f"\n## {r['suite']} failures\n" + "\n".join(f"- {name}" for name in r["failed"]))
    return "\n".join(parts)


@click.command()
@click.option("--runs-dir", default="runs", show_default=True)
@click.option("--suites", default=None, help="comma list of suites to include (default: all found)")
@click.option("--out-md", type=str, default=None, help="If set, write a Markdown summary file")
def main(runs_dir: str, suites: Optional[str], out_md: Optional[str]):
    """Collect every report.json below a runs directory into one table."""
    wanted = [s.strip() for s in suites.split(",") if s.strip()] if suites else None
    text = summarize(runs_dir, wanted)
    click.echo(text)
    if out_md:
        Path(out_md).write_text("# Results summary\n\n" + text + "\n")
        click.echo(f"\nWrote Markdown summary to {out_md}")


if __name__ == "__main__":
    main()
