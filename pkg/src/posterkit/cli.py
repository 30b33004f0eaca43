"""Subcommand CLI chaining ingest, segmentation, ranking, rendering, and
layout verification, plus the detect/render remediation loop.

Exit codes: 0 success, 1 validation error (bad flags, config, or input
files), 2 runtime failure. With ``--json``, errors also land on stderr
as one machine-parsable JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from PIL import Image

from . import benchgen
from .config import ConfigError, PipelineConfig, apply_overrides, load_config
from .document import DocumentError, PanelPlan, ParsedDocument, load_document
from .graph import (PageRankConfig, build_graph, contribution_matrix,
                    pagerank_reversed, write_edgelist, write_scores)
from .layout import (DetectorConfig, LayoutError, PanelBox, Status, annotate,
                     detect, make_panel_crop, write_verdict)
from .metrics import MetricError, classification_report
from .plugin import PluginScorer
from .render import (FontUnavailable, RenderError, TypesetConfig,
                     compression_report, config_with_font_size, group_segments,
                     render_group, write_render_outputs, _metrics)
from .scoring import (CachingScorer, Scorer, ScorerError, ScorerFailure,
                      VisualTokenEstimator, fit_ngram)
from .segmentation import Segment, SegmentationConfig, segment
from .selection import SelectionConfig, select_diverse, write_selection


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posterkit",
        description="Select, render, and layout-check poster content from a parsed paper.",
    )
    parser.add_argument("--config", help="TOML or JSON config file (default: $PK_CONFIG)")
    parser.add_argument("--json", action="store_true", help="emit errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scorer_flags(p):
        p.add_argument("--scorer", choices=["builtin-ngram", "plugin"], default=None,
                       help="scoring backend (default builtin-ngram)")
        p.add_argument("--plugin-command", default=None,
                       help="stdio scorer plug-in command line (with --scorer plugin)")

    p = sub.add_parser("segment", help="split a document into segments")
    p.add_argument("--input", required=True, help="parsed-document JSON file")
    p.add_argument("--out", help="segments JSON output (default: stdout)")
    p.add_argument("--alpha", type=float, default=None, help="boundary sensitivity (default 1.0)")
    add_scorer_flags(p)

    p = sub.add_parser("graph", help="contribution graph and importance scores")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True, help="writes edges.txt and scores.json")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None, help="edge threshold (default 0.5)")
    p.add_argument("--damping", type=float, default=None, help="PageRank damping (default 0.85)")
    add_scorer_flags(p)

    p = sub.add_parser("select", help="diversity-aware greedy selection")
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="selection JSON output")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--damping", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None, help="selection budget fraction (default 0.5)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="diversity decay factor (default 0.7; not a studied value)")
    add_scorer_flags(p)

    p = sub.add_parser("render", help="render selected segments to page images")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    for flag, conv in (("--alpha", float), ("--beta", float), ("--damping", float),
                       ("--gamma", float), ("--dpi", int), ("--font-size", float)):
        p.add_argument(flag, type=conv, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    add_scorer_flags(p)

    p = sub.add_parser("detect", help="classify one panel crop")
    p.add_argument("--image", required=True, help="crop containing the panel plus blank surround")
    p.add_argument("--panel", required=True, help="panel box as X,Y,W,H in crop pixels")
    p.add_argument("--n-strips", type=int, default=None)
    p.add_argument("--tau-s", type=float, default=None)
    p.add_argument("--annotate", help="write a diagnostic overlay PNG here")
    p.add_argument("--verdict", help="write the JSON verdict here")

    p = sub.add_parser("bench", help="generate the synthetic ternary benchmark")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("eval-layout", help="run the detector over a benchmark manifest")
    p.add_argument("--manifest", required=True, help="JSONL manifest from 'bench'")
    p.add_argument("--out", help="report JSON (default: layout_report.json beside the manifest)")
    p.add_argument("--n-strips", type=int, default=None)
    p.add_argument("--tau-s", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("pipeline", help="ingest -> segment -> graph -> select -> render")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--verify", action="store_true",
                   help="self-check rendered pages with the layout detector and remediate")
    p.add_argument("--plans", default=None,
                   help="panel-plan JSON (array of plans) seeding per-panel render "
                        "parameters for --verify; remediated plans with trim/expand "
                        "hints are written back to panel_plans.json")
    for flag, conv in (("--alpha", float), ("--beta", float), ("--damping", float),
                       ("--gamma", float), ("--dpi", int), ("--font-size", float),
                       ("--n-strips", int), ("--tau-s", float),
                       ("--max-remediation-rounds", int)):
        p.add_argument(flag, type=conv, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    add_scorer_flags(p)

    return parser


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    names = ("alpha", "beta", "gamma", "lam", "damping", "n_strips", "tau_s",
             "dpi", "font_size", "max_remediation_rounds", "scorer", "plugin_command")
    overrides = {n: getattr(args, n) for n in names if hasattr(args, n)}
    return apply_overrides(cfg, overrides)


def _build_scorer(cfg: PipelineConfig, doc: ParsedDocument) -> Scorer:
    if cfg.scorer == "plugin":
        return CachingScorer(PluginScorer(cfg.plugin_command))
    return CachingScorer(fit_ngram([doc.full_text], cfg.ngram_order, cfg.ngram_k))


def _segments_payload(segments: list[Segment]) -> list[dict]:
    return [
        {
            "id": s.id,
            "paragraph_ids": list(s.paragraph_ids),
            "home_section": s.home_section,
            "text": s.text,
        }
        for s in segments
    ]


def _segment_and_rank(doc: ParsedDocument, cfg: PipelineConfig, scorer: Scorer):
    segments = segment(doc, scorer, SegmentationConfig(alpha=cfg.alpha))
    matrix = contribution_matrix(segments, scorer)
    graph = build_graph(matrix, cfg.beta)
    scores = pagerank_reversed(graph, PageRankConfig(damping=cfg.damping))
    return segments, matrix, graph, scores


def remediate(status: Status, plan: PanelPlan) -> PanelPlan:
    """One remediation step: nudge font size, set the content hint flag.

    Overflow steps the font down 1 pt (floor 6 pt) and flags a trim;
    sparse steps it up 1 pt (cap 2x the original size) and flags an
    expand. Content itself is never rewritten here; the hints address
    the external summarization stage.
    """
    params = dict(plan.render_params)
    font = float(params.get("font_size", 0))
    base = float(params.setdefault("base_font_size", font))
    trim, expand = plan.trim_hint, plan.expand_hint
    if status is Status.OVERFLOW:
        params["font_size"] = max(6.0, font - 1.0)
        trim = True
    elif status is Status.SPARSE:
        params["font_size"] = min(2.0 * base, font + 1.0)
        expand = True
    return PanelPlan(plan.panel_id, plan.title, list(plan.bullets), params, trim, expand)


def _page_panel(page, typeset: TypesetConfig) -> PanelBox:
    """Declared content box of a page in raster pixels, ink allowances added."""
    scale = typeset.scale
    metrics = _metrics(typeset.resolved_font_path())
    overhang = max(0.0, metrics.line_extent(typeset.font_size) - typeset.line_height)
    x_pt, y_pt, w_pt, h_pt = page.text_box_pt
    x = max(0, int(x_pt * scale) - 2)
    y = max(0, int(y_pt * scale) - 2)
    w = int(math.ceil(max(w_pt, 1.0) * scale)) + 4
    h = int(math.ceil((h_pt + overhang) * scale)) + 4
    return PanelBox(x, y, w, h)


def _self_check_page(page, typeset: TypesetConfig, det_cfg: DetectorConfig):
    """Detect on the page's declared content box with generous blank surround.

    The surround must leave each axis mostly blank for the median rule
    and be large enough for the strip count.
    """
    panel = _page_panel(page, typeset)
    mx = max(round(0.6 * panel.w), -(-(det_cfg.n_strips + 8 - panel.w) // 2), 1)
    my = max(round(0.6 * panel.h), -(-(det_cfg.n_strips + 8 - panel.h) // 2), 1)
    crop, crop_panel = make_panel_crop(page.image, panel, margin_px=(mx, my),
                                       pad_to_multiple=det_cfg.n_strips)
    return detect(crop, crop_panel, det_cfg)


_WORST = {Status.OVERFLOW: 0, Status.SPARSE: 1, Status.VALID: 2}


def _verify_groups(selected_groups, cfg: PipelineConfig, base_typeset: TypesetConfig,
                   doc: ParsedDocument, seed_plans: dict[int, PanelPlan] | None = None):
    """Render/detect/remediate loop per section group; honest final report.

    ``seed_plans`` (keyed by panel id) may carry externally generated
    render parameters; each group without one gets a synthesized plan at
    the configured font size.
    """
    det_cfg = DetectorConfig(n_strips=cfg.n_strips, tau_s=cfg.tau_s)
    report = []
    final_pages = []
    final_plans = []
    for panel_id, (section_id, group) in enumerate(selected_groups):
        title = doc.tree.nodes[section_id].title
        seeded = (seed_plans or {}).get(panel_id)
        if seeded is not None:
            params = dict(seeded.render_params)
            params.setdefault("base_font_size", seeded.font_size)
            plan = PanelPlan(panel_id, seeded.title or title, list(seeded.bullets),
                             params, seeded.trim_hint, seeded.expand_hint)
        else:
            plan = PanelPlan(
                panel_id=panel_id,
                title=title,
                bullets=[seg.text for seg in group],
                render_params={"font_size": base_typeset.font_size,
                               "base_font_size": base_typeset.font_size},
            )
        rounds_used = 0
        while True:
            typeset = config_with_font_size(base_typeset, plan.font_size)
            pages = render_group(group, typeset)
            statuses = [_self_check_page(page, typeset, det_cfg) for page in pages]
            worst = min((s.status for s in statuses), key=_WORST.get)
            if worst is Status.VALID or rounds_used >= cfg.max_remediation_rounds:
                break
            plan = remediate(worst, plan)
            rounds_used += 1
        report.append({
            "panel_id": panel_id,
            "section_id": section_id,
            "title": title,
            "rounds_used": rounds_used,
            "font_size": plan.font_size,
            "trim_hint": plan.trim_hint,
            "expand_hint": plan.expand_hint,
            "pages": [s.to_dict() for s in statuses],
            "final_status": worst.value,
        })
        final_pages.append((section_id, pages))
        final_plans.append(plan)
    all_valid = all(entry["final_status"] == "valid" for entry in report)
    return final_pages, {"groups": report, "all_valid": all_valid}, final_plans


def _load_plans(path: str | None) -> dict[int, PanelPlan] | None:
    if path is None:
        return None
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise DocumentError("plans file must be a JSON array of panel plans")
    plans = [PanelPlan.from_dict(entry) for entry in raw]
    return {plan.panel_id: plan for plan in plans}


def _parse_panel(spec: str) -> PanelBox:
    try:
        x, y, w, h = (int(part) for part in spec.split(","))
    except ValueError:
        raise ValueError(f"--panel expects X,Y,W,H integers, got {spec!r}") from None
    return PanelBox(x, y, w, h)


def cmd_segment(args) -> int:
    cfg = _config_from_args(args)
    doc = load_document(args.input)
    segments = segment(doc, _build_scorer(cfg, doc), SegmentationConfig(alpha=cfg.alpha))
    payload = json.dumps({"segments": _segments_payload(segments)}, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(f"{len(segments)} segments -> {args.out}")
    else:
        sys.stdout.write(payload)
    return 0


def cmd_graph(args) -> int:
    cfg = _config_from_args(args)
    doc = load_document(args.input)
    _, _, graph, scores = _segment_and_rank(doc, cfg, _build_scorer(cfg, doc))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_edgelist(graph, out / "edges.txt")
    write_scores(scores, out / "scores.json")
    print(f"{graph.n} nodes, {len(graph.weights)} edges -> {out}")
    return 0


def cmd_select(args) -> int:
    cfg = _config_from_args(args)
    doc = load_document(args.input)
    segments, _, graph, scores = _segment_and_rank(doc, cfg, _build_scorer(cfg, doc))
    result = select_diverse(graph, scores, segments, doc.tree, SelectionConfig(cfg.gamma, cfg.lam))
    if args.out:
        write_selection(result, args.out)
    print(" ".join(str(i) for i in result.selected))
    return 0


def _render_outputs(doc, cfg, scorer, out_dir, verify: bool, plans_path: str | None = None):
    segments, _, graph, scores = _segment_and_rank(doc, cfg, scorer)
    result = select_diverse(graph, scores, segments, doc.tree, SelectionConfig(cfg.gamma, cfg.lam))
    selected = [segments[i] for i in result.selected]
    groups = group_segments(selected, doc)
    typeset = TypesetConfig(dpi=cfg.dpi, font_size=cfg.font_size,
                            line_height=cfg.font_size)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_edgelist(graph, out / "edges.txt")
    write_scores(scores, out / "scores.json")
    write_selection(result, out / "selection.json")
    (out / "segments.json").write_text(
        json.dumps({"segments": _segments_payload(segments)}, indent=2) + "\n", encoding="utf-8")

    extra = {}
    if verify:
        seed_plans = _load_plans(plans_path)
        groups_pages, verify_report, final_plans = _verify_groups(
            groups, cfg, typeset, doc, seed_plans)
        extra["verify"] = verify_report
        (out / "panel_plans.json").write_text(
            json.dumps([p.to_dict() for p in final_plans], indent=2) + "\n",
            encoding="utf-8")
    else:
        groups_pages = [(sid, render_group(group, typeset)) for sid, group in groups]
    pages = [p for _, ps in groups_pages for p in ps]
    report = compression_report(selected, pages, scorer,
                                VisualTokenEstimator(patch_size=cfg.patch_size))
    manifest_path = write_render_outputs(groups_pages, report, doc, out, extra=extra)
    return segments, result, pages, manifest_path, extra


def cmd_render(args) -> int:
    cfg = _config_from_args(args)
    doc = load_document(args.input)
    _, _, pages, manifest_path, _ = _render_outputs(doc, cfg, _build_scorer(cfg, doc),
                                                    args.out_dir, verify=False)
    print(f"{len(pages)} pages -> {manifest_path}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    doc = load_document(args.input)
    segments, result, pages, manifest_path, extra = _render_outputs(
        doc, cfg, _build_scorer(cfg, doc), args.out_dir, verify=args.verify,
        plans_path=args.plans)
    line = (f"{len(segments)} segments, selected {len(result.selected)}, "
            f"{len(pages)} pages -> {manifest_path}")
    if args.verify:
        line += f", all_valid={extra['verify']['all_valid']}"
    print(line)
    return 0


def cmd_detect(args) -> int:
    cfg = _config_from_args(args)
    det_cfg = DetectorConfig(
        n_strips=args.n_strips if args.n_strips is not None else cfg.n_strips,
        tau_s=args.tau_s if args.tau_s is not None else cfg.tau_s,
    )
    panel = _parse_panel(args.panel)
    image = Image.open(args.image)
    status = detect(image, panel, det_cfg)
    if args.annotate:
        annotate(image, panel, det_cfg).save(args.annotate, format="PNG")
    if args.verdict:
        write_verdict(status, args.verdict)
    print(status.status.value)
    return 0


def cmd_bench(args) -> int:
    manifest = benchgen.generate_benchmark(args.seed, args.per_class, args.out_dir,
                                           jobs=args.jobs)
    counts = manifest.counts()
    print(f"{len(manifest.entries)} panels "
          f"({', '.join(f'{k}={v}' for k, v in sorted(counts.items()))}) -> {args.out_dir}")
    return 0


def cmd_eval_layout(args) -> int:
    cfg = _config_from_args(args)
    det_cfg = DetectorConfig(
        n_strips=args.n_strips if args.n_strips is not None else cfg.n_strips,
        tau_s=args.tau_s if args.tau_s is not None else cfg.tau_s,
    )
    manifest = benchgen.load_manifest(args.manifest)
    base = Path(args.manifest).parent

    def run(entry):
        image = Image.open(base / entry.image_path)
        return detect(image, entry.panel(), det_cfg).status

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            predictions = list(pool.map(run, manifest.entries))
    else:
        predictions = [run(e) for e in manifest.entries]
    labels = [e.label for e in manifest.entries]
    report = classification_report(predictions, labels)
    out = Path(args.out) if args.out else base / "layout_report.json"
    out.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"accuracy {report.accuracy:.4f} -> {out}")
    return 0


_COMMANDS = {
    "segment": cmd_segment,
    "graph": cmd_graph,
    "select": cmd_select,
    "render": cmd_render,
    "detect": cmd_detect,
    "bench": cmd_bench,
    "eval-layout": cmd_eval_layout,
    "pipeline": cmd_pipeline,
}

# Environment or mid-run failures (exit 2); everything else user-fixable
# input or flags (exit 1). Order matters: runtime classes subclass the
# broader validation bases.
_RUNTIME_ERRORS = (ScorerFailure, FontUnavailable, benchgen.IoFailure,
                   benchgen.BenchmarkIntegrityError)
_VALIDATION_ERRORS = (ConfigError, DocumentError, ValueError, FileNotFoundError,
                      LayoutError, MetricError, RenderError, ScorerError,
                      benchgen.BenchmarkError)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _RUNTIME_ERRORS as exc:
        _report_error(args, exc)
        return 2
    except _VALIDATION_ERRORS as exc:
        _report_error(args, exc)
        return 1
    except Exception as exc:  # runtime failure
        _report_error(args, exc)
        return 2


def _report_error(args, exc: Exception) -> None:
    if getattr(args, "json", False):
        payload = {"error": str(exc), "type": type(exc).__name__}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
