"""JSON and static HTML explanation reports."""

from __future__ import annotations

import base64
import html
import io
import json
from pathlib import Path

import numpy as np

REPORT_VERSION = 1


def _unit_json(kind, ref, weight):
    out = {"kind": kind, "weight": float(weight)}
    if kind == "region":
        out["box"] = [float(v) for v in ref]
    else:
        out["text"] = str(ref)
    return out


def explanation_dict(attribution, metadata=None) -> dict:
    metadata = metadata or {}
    return {
        "id": attribution.id if attribution.id is not None else metadata.get("id"),
        "method": attribution.method,
        "target_class": int(attribution.target_class),
        "units": [_unit_json(k, r, w) for (k, r), w in zip(attribution.units, attribution.weights)],
        "diagnostics": attribution.diagnostics(),
    }


def render_report(attributions, metadata, out_path, html_path=None) -> dict:
    """Write ``{"version", "explanations": [...]}`` to ``out_path``.

    ``metadata`` is a dict (or one dict per attribution) that may carry
    ``id``, ``image`` (path to draw regions on) and ``class_names``.
    """
    attributions = list(attributions)
    metas = metadata if isinstance(metadata, (list, tuple)) else [metadata or {}] * len(attributions)
    report = {
        "version": REPORT_VERSION,
        "explanations": [explanation_dict(a, m) for a, m in zip(attributions, metas)],
    }
    Path(out_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if html_path is not None:
        Path(html_path).write_text(render_html(report, metas), encoding="utf-8")
    return report


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _colour(weight, scale):
    a = min(abs(weight) / scale, 1.0) if scale > 0 else 0.0
    rgb = "220,50,47" if weight > 0 else "38,139,210"
    return f"rgba({rgb},{a:.3f})"


def _image_data_uri(path):
    from PIL import Image

    with Image.open(path) as im:
        buf = io.BytesIO()
        im.convert("RGB").save(buf, format="PNG")
        size = im.size
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii"), size


def _explanation_html(exp, meta):
    units = exp["units"]
    scale = max((abs(u["weight"]) for u in units), default=0.0)
    esc = html.escape
    parts = [f"<section><h2>{esc(str(exp['id']))} &middot; {esc(exp['method'])} "
             f"&middot; class {exp['target_class']}</h2>"]
    tokens = [u for u in units if u["kind"] != "region"]
    if tokens:
        spans = "".join(
            f'<span class="tok" style="background:{_colour(u["weight"], scale)}" '
            f'title="{u["weight"]:+.4f}">{esc(u["text"])}</span> '
            for u in tokens
        )
        parts.append(f"<p class='text'>{spans}</p>")
    regions = [u for u in units if u["kind"] == "region"]
    image = meta.get("image") if meta else None
    if regions:
        width, height = 320, 320
        img_tag = ""
        if image and Path(image).is_file():
            uri, (w0, h0) = _image_data_uri(image)
            height = int(round(width * h0 / w0))
            img_tag = f'<image href="{uri}" width="{width}" height="{height}"/>'
        rects = "".join(
            f'<rect x="{u["box"][0] * width:.1f}" y="{u["box"][1] * height:.1f}" '
            f'width="{(u["box"][2] - u["box"][0]) * width:.1f}" '
            f'height="{(u["box"][3] - u["box"][1]) * height:.1f}" '
            f'fill="{_colour(u["weight"], scale)}" stroke="#333">'
            f'<title>{u["weight"]:+.4f}</title></rect>'
            for u in regions
        )
        parts.append(f'<svg width="{width}" height="{height}" style="background:#eee">{img_tag}{rects}</svg>')
    legend = sorted(units, key=lambda u: -u["weight"])
    rows = "".join(
        f"<tr><td>{esc(u.get('text') or str(u.get('box')))}</td><td>{esc(u['kind'])}</td>"
        f"<td>{u['weight']:+.4f}</td></tr>"
        for u in legend
    )
    parts.append(f"<table class='legend'><tr><th>unit</th><th>kind</th><th>weight</th></tr>{rows}</table>")
    diag = ", ".join(f"{k}={v:.4g}" for k, v in exp["diagnostics"].items())
    if diag:
        parts.append(f"<p class='diag'>{esc(diag)}</p>")
    parts.append("</section>")
    return "".join(parts)


def render_html(report: dict, metas=None) -> str:
    metas = list(metas or [])
    metas += [{}] * (len(report["explanations"]) - len(metas))
    body = "".join(_explanation_html(e, m) for e, m in zip(report["explanations"], metas))
    return (
        "<!DOCTYPE html><html><head><meta charset='utf-8'><title>matk explanation</title>"
        "<style>body{font-family:sans-serif;margin:2em}.tok{padding:2px 3px;border-radius:3px}"
        "table{border-collapse:collapse}td,th{padding:2px 8px;border-bottom:1px solid #ddd}</style>"
        f"</head><body>{body}</body></html>\n"
    )
