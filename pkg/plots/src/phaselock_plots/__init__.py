"""Figure rendering for phaselock run logs.

Consumes only the documented time-series CSV schema; renders a two-panel
timeline (counts plus stretcher output, uncontrolled region shaded) and
interval zooms (noise band around the mean, step-size detail).
"""

__version__ = "0.1.0"
