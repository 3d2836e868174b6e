"""Deep Q-learning for nitrogen management on a surrogate maize environment.

Subpackages: :mod:`agropomdp.nn` (networks, Adam, gradient checks),
:mod:`agropomdp.rl` (tabular and deep Q-learning), :mod:`agropomdp.crop`
(environment), :mod:`agropomdp.weather` (weather series and climate
perturbations) and :mod:`agropomdp.experiment` (config-driven runs and CLI).
"""

__version__ = "0.1.0"
