"""Simulation laboratory for a degraded-Bernoulli secret-key-agreement
protocol driven by hidden-distribution generation.

Layers, bottom up:

* :mod:`deeprandom.bernoulli`  - bit/parameter vector algebra and moments;
* :mod:`deeprandom.dists`      - sparse distributions over {0,1}^n, the
  cross-block norm, tidying and synchronization searches;
* :mod:`deeprandom.sleek`      - permutation-kernel smoothing;
* :mod:`deeprandom.adversary`  - opponent strategies and quadratic payoffs;
* :mod:`deeprandom.seeds`      - certified seed distributions;
* :mod:`deeprandom.drg`        - the recursive hidden-distribution generator;
* :mod:`deeprandom.distill`    - advantage distillation and reconciliation;
* :mod:`deeprandom.protocol`   - the per-block session engine;
* :mod:`deeprandom.campaign`   - Monte Carlo campaigns and rate accounting;
* :mod:`deeprandom.checks`     - the numeric verification registry;
* :mod:`deeprandom.cli`        - the command-line front end.
"""

__version__ = "0.1.0"
