"""Self-contained HTML reports of attention weights over tokens.

Each token is shaded with opacity proportional to its weight divided by the
example's maximum weight (absolute weights shrink with sequence length, so
per-example scaling is what keeps the picture readable).  Gold labels are
shown in red, predictions in blue.  The page embeds all styling inline and
performs no network requests.
"""

from __future__ import annotations

import html
from dataclasses import dataclass

import numpy as np


@dataclass
class HeatmapReport:
    """One rendered example: tokens, their weights, and the labels to show."""

    tokens: list
    weights: np.ndarray
    predicted: list
    gold: list
    doc_id: str = ""

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.tokens) != self.weights.shape[0]:
            raise ValueError(
                f"{len(self.tokens)} tokens but {self.weights.shape[0]} weights")


_PAGE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>Attention weights</title>
<style>
body {{ font-family: sans-serif; margin: 2em; }}
.example {{ margin-bottom: 1.5em; padding: 0.8em; border: 1px solid #ccc; }}
.tokens span {{ padding: 2px 3px; margin: 1px; border-radius: 3px; display: inline-block; }}
.labels {{ margin-top: 0.5em; font-size: 0.9em; }}
.gold {{ color: #c00; }}
.pred {{ color: #00c; }}
</style>
</head>
<body>
<h1>Attention weights</h1>
{body}
</body>
</html>
"""


def _render_example(report):
    peak = float(report.weights.max()) if report.weights.size else 0.0
    spans = []
    for token, weight in zip(report.tokens, report.weights):
        opacity = float(weight) / peak if peak > 0 else 0.0
        spans.append(
            f'<span style="background: rgba(214, 39, 40, {opacity:.3f})" '
            f'title="{weight:.4f}">{html.escape(token)}</span>'
        )
    gold = html.escape(", ".join(report.gold))
    pred = html.escape(", ".join(report.predicted))
    head = f"<h3>{html.escape(report.doc_id)}</h3>" if report.doc_id else ""
    return (
        f'<div class="example">{head}<div class="tokens">{"".join(spans)}</div>'
        f'<div class="labels"><span class="gold">gold: {gold}</span> &middot; '
        f'<span class="pred">predicted: {pred}</span></div></div>'
    )


def render_html(reports):
    """Assemble the full report page for a list of HeatmapReport."""
    return _PAGE.format(body="\n".join(_render_example(r) for r in reports))
