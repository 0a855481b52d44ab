"""Desk-scale simulator of coincidence-fed P&O phase stabilization.

Subpackage map:

- ``plant``       optical response model and stochastic count generation
- ``counting``    event-level acquisition pipeline (delays, ToA, coincidences)
- ``control``     classical and adaptive perturb-and-observe controllers
- ``calibration`` sawtooth self-adjustment of the circular bounds
- ``metrics``     rise/fall times, noise statistics, visibility
- ``harness``     experiment configs, scenario runner, paired comparisons
- ``cli``         the ``phaselock`` command line tool
"""

__version__ = "0.1.0"
