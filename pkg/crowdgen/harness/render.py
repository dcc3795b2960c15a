"""SVG rendering of scenarios and trajectories."""
import io
import logging
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure
from matplotlib.lines import Line2D
from matplotlib.patches import Circle, Polygon as PolygonPatch, Rectangle

from ..guidance import Layout
from ..world import Bounds, Scenario, TrajectoryLog

logger = logging.getLogger(__name__)

# matplotlib writes SVG at 72 units per inch
SVG_DPI = 72
DEFAULT_WIDTH = 600.0
OBSTACLE_COLOR = '#7f7f7f'
SVG_RC = {'svg.hashsalt': 'crowdgen', 'path.simplify': False, 'svg.fonttype': 'none'}


def agent_color(index: int) -> Tuple[float, float, float, float]:
    palette = matplotlib.colormaps['tab10']
    return palette(index % palette.N)


def viewport_size(bounds: Bounds, width: float = DEFAULT_WIDTH) -> Tuple[float, float]:
    xmin, ymin, xmax, ymax = bounds
    return width, width * (ymax - ymin) / (xmax - xmin)


def world_to_viewport(bounds: Bounds, width: float, points) -> np.ndarray:
    """Affine map from world coordinates to SVG pixels; the y axis points down in the viewport."""
    xmin, ymin, xmax, ymax = bounds
    _, height = viewport_size(bounds, width)
    points = np.asarray(points, dtype=np.float64)
    px = (points[..., 0] - xmin) / (xmax - xmin) * width
    py = (ymax - points[..., 1]) / (ymax - ymin) * height
    return np.stack([px, py], axis=-1)


def _line(ax, points: np.ndarray, **kwargs) -> Line2D:
    line = Line2D(points[:, 0], points[:, 1], **kwargs)
    line.set_snap(False)
    line.set_clip_on(False)
    ax.add_line(line)
    return line


def render_svg(scenario: Union[Scenario, Layout], logs: Sequence[TrajectoryLog] = (),
               waypoints: Optional[Mapping[int, np.ndarray]] = None, width: float = DEFAULT_WIDTH) -> str:
    """Draws obstacles, per-agent trajectories, starts, goals and optional A* waypoints.

    Element ids follow ``agent-<i>-trajectory``, ``agent-<i>-start``, ``agent-<i>-goal``,
    ``agent-<i>-waypoints`` and ``obstacle-<k>``.
    """
    bounds = tuple(scenario.bounds)
    xmin, ymin, xmax, ymax = bounds
    width, height = viewport_size(bounds, width)
    with matplotlib.rc_context(SVG_RC):
        figure = Figure(figsize=(width / SVG_DPI, height / SVG_DPI), dpi=SVG_DPI)
        canvas = FigureCanvasSVG(figure)
        figure.patch.set_visible(False)
        ax = figure.add_axes((0.0, 0.0, 1.0, 1.0))
        ax.set_axis_off()
        ax.set_xlim(xmin, xmax)
        ax.set_ylim(ymin, ymax)

        frame = Rectangle((xmin, ymin), xmax - xmin, ymax - ymin, fill=False, edgecolor='black',
                          linewidth=1.0, gid='bounds')
        ax.add_patch(frame)
        for k, polygon in enumerate(scenario.obstacles):
            vertices = getattr(polygon, 'vertices', polygon)
            ax.add_patch(PolygonPatch(np.asarray(vertices), closed=True, facecolor=OBSTACLE_COLOR,
                                      edgecolor='none', gid=f'obstacle-{k}'))

        for log in logs:
            for track in log.tracks:
                if len(track.positions) < 2:
                    continue
                _line(ax, track.positions, color=agent_color(track.agent_id), linewidth=1.0,
                      gid=f'agent-{track.agent_id}-trajectory')

        for i, task in enumerate(getattr(scenario, 'tasks', ())):
            color = agent_color(i)
            ax.add_patch(Circle(tuple(task.start), task.radius, fill=False, edgecolor=color,
                                linewidth=1.0, gid=f'agent-{i}-start'))
            _line(ax, task.goal[None, :], color=color, marker='^', markersize=6, linestyle='none',
                  gid=f'agent-{i}-goal')

        for i, points in sorted((waypoints or {}).items()):
            points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
            if len(points):
                _line(ax, points, color=agent_color(i), linewidth=0.5, linestyle=':', marker='.',
                      markersize=2, gid=f'agent-{i}-waypoints')

        buffer = io.StringIO()
        canvas.print_svg(buffer, metadata={'Date': None})
    return buffer.getvalue()


def save_svg(path: Union[str, Path], *args, **kwargs) -> Path:
    path = Path(path)
    path.write_text(render_svg(*args, **kwargs))
    logger.debug('rendered %s', path)
    return path
