"""Static figures of frames, grids and tracks."""

import logging
from typing import Optional

import plotly.graph_objects as go

from dyntomo.models import TomographyInstance, TrackSet
from jobs.jobs_config import PLOT_DIV_ID

logger = logging.getLogger(__name__)

FRAME_COLORS = ["blue", "red", "green", "orange", "purple", "brown", "teal", "gray"]


def _xy(points):
    return [float(p[0]) for p in points], [float(p[1]) for p in points]


def build_figure(instance: TomographyInstance, result: Optional[TrackSet] = None, title: str = "Tracks") -> go.Figure:
    """Grids as hollow markers, frame points as dots, tracks as polylines."""
    fig = go.Figure()
    for tau in range(instance.t):
        color = FRAME_COLORS[tau % len(FRAME_COLORS)]
        x, y = _xy(instance.candidates(tau).points)
        fig.add_trace(go.Scatter(x=x, y=y, mode="markers", name=f"Grid τ={tau}",
                                 marker=dict(symbol="circle-open", size=12, color=color)))
        frame = result.frames[tau] if result is not None else instance.known_positions.get(tau, [])
        if frame:
            x, y = _xy(frame)
            fig.add_trace(go.Scatter(x=x, y=y, mode="markers", name=f"Frame τ={tau}",
                                     marker=dict(size=7, color=color)))
    if result is not None:
        for m, path in enumerate(result.paths()):
            x, y = _xy(path)
            fig.add_trace(go.Scatter(x=x, y=y, mode="lines", name=f"Track {m}", showlegend=False,
                                     line=dict(color="black", width=1)))
    fig.update_layout(title=title, xaxis_title="x", yaxis_title="y", template="plotly_white",
                      yaxis=dict(scaleanchor="x", scaleratio=1))
    return fig


def write_figure(fig: go.Figure, path):
    """Write a standalone HTML page, or an SVG via kaleido when path ends in .svg."""
    path = str(path)
    if path.endswith(".svg"):
        fig.write_image(path, format="svg")
    else:
        fig.write_html(path, include_plotlyjs=True, full_html=True, div_id=PLOT_DIV_ID)
    logger.info("plot written to %s", path)
