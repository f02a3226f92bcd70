"""Bundled data: the board-stiffness measurements and named parameter sets."""
from __future__ import annotations

import numpy as np

from .distribution import MgsnParams
from .estimation import DataMatrix

# Four stiffness measurements (shock, vibration, two static tests) on 30 boards.
STIFFNESS_RAW = np.array(
    [
        [1889, 1651, 1561, 1778],
        [2403, 2048, 2087, 2197],
        [2119, 1700, 1815, 2222],
        [1645, 1627, 1110, 1533],
        [1976, 1916, 1614, 1883],
        [1712, 1712, 1439, 1546],
        [1943, 1685, 1271, 1671],
        [2104, 1820, 1717, 1874],
        [2983, 2794, 2412, 2581],
        [1745, 1600, 1348, 1508],
        [1710, 1591, 1518, 1667],
        [2046, 1907, 1627, 1898],
        [1840, 1841, 1595, 1741],
        [1867, 1685, 1493, 1678],
        [1859, 1649, 1389, 1714],
        [1954, 2149, 1180, 1281],
        [1325, 1170, 1002, 1176],
        [1419, 1371, 1251, 1308],
        [1828, 1634, 1602, 1755],
        [1725, 1594, 1313, 1646],
        [2276, 2189, 1547, 2111],
        [1899, 1614, 1422, 1477],
        [1633, 1513, 1290, 1516],
        [2061, 1867, 1646, 2037],
        [1856, 1493, 1356, 1533],
        [1727, 1412, 1238, 1469],
        [2168, 1896, 1701, 1834],
        [1655, 1675, 1414, 1597],
        [2326, 2301, 2065, 2234],
        [1490, 1382, 1214, 1284],
    ],
    dtype=float,
)
STIFFNESS_LABELS = ("x1", "x2", "x3", "x4")
STIFFNESS_SCALE = 0.01


def stiffness(raw: bool = False) -> DataMatrix:
    """The 30 x 4 stiffness data, divided by 100 unless ``raw``."""
    v = STIFFNESS_RAW if raw else STIFFNESS_RAW * STIFFNESS_SCALE
    return DataMatrix(v, STIFFNESS_LABELS)


# d = 4 configuration used by the simulation study.
SIM_MU = np.array([0.0, 0.0, 1.0, 1.0])
SIM_SIGMA = np.array(
    [
        [2.0, 2.0, 1.0, 0.0],
        [2.0, 3.0, 2.0, 1.0],
        [1.0, 2.0, 3.0, 2.0],
        [0.0, 1.0, 2.0, 2.0],
    ]
)


def simulation_params(p: float = 0.5) -> MgsnParams:
    return MgsnParams(p, SIM_MU, SIM_SIGMA)


# Bivariate shapes: unimodal symmetric, skewed, and two bimodal cases.
PRESETS = {
    "a": MgsnParams(0.75, [0.0, 0.0], [[2.0, 0.0], [0.0, 2.0]]),
    "b": MgsnParams(0.5, [2.0, 2.0], [[1.0, -0.5], [-0.5, 1.0]]),
    "c": MgsnParams(0.15, [2.0, 1.0], [[1.0, -0.5], [-0.5, 1.0]]),
    "d": MgsnParams(0.15, [0.5, -2.5], [[1.0, 0.5], [0.5, 1.0]]),
}
