import xml.etree.ElementTree as ET

import numpy as np
import pytest

from emoarc.arcs import EmotionArc
from emoarc.plot import arc_svg, nice_ticks

NS = "{http://www.w3.org/2000/svg}"


def test_svg_is_well_formed_and_breaks_at_gaps():
    arc = EmotionArc(np.arange(6), np.array([0.0, 1.0, np.nan, 2.0, 1.0, 0.5]))
    other = EmotionArc(np.arange(6), np.linspace(-1, 1, 6))
    root = ET.fromstring(arc_svg([("pred <a>", arc), ("gold", other)], title="A & B"))
    lines = root.findall(f"{NS}polyline")
    # one gap splits the first arc into two segments
    assert len(lines) == 3
    texts = [t.text for t in root.iter(f"{NS}text")]
    assert "pred <a>" in texts and "A & B" in texts


def test_empty_inputs_rejected():
    with pytest.raises(ValueError):
        arc_svg([])
    with pytest.raises(ValueError):
        arc_svg([("x", EmotionArc(np.arange(2), np.array([np.nan, np.nan])))])


def test_nice_ticks():
    assert nice_ticks(0, 1) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    ticks = nice_ticks(-2.3, 2.7)
    assert ticks[0] >= -2.3 and ticks[-1] <= 2.7
    assert len(set(np.round(np.diff(ticks), 9))) == 1
