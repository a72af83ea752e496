"""
__init__.py

echoscope: fragmentation analysis of party-pair mention networks.

Records -> directed weighted mention network -> one subnetwork per party pair
-> internal/boundary partition -> fragmentation scores -> random-intercept
models explaining them.

Usage:
------
>>> from echoscope.config import RunConfig
>>> from echoscope.services import run_pipeline
>>> bundle = run_pipeline(RunConfig.from_json("data/example/config.json"))
"""

__version__ = "0.1.0"
