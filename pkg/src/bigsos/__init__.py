"""Rule formats, queue-machine reductions and bounded distributive-law
construction for stream and LTS specifications."""
from __future__ import annotations

from .behavior import StreamPrefix, TreePrefix
from .engine import (
    Ambiguous,
    BaseStreamEnv,
    ConsistentPrefix,
    NoExtension,
    Unknown,
    Witness,
    check_axioms,
    check_extension,
    check_extension_diagram,
    check_forcedness,
    one_step_rho,
    unfold_lts,
    unfold_stream,
)
from .qm import ClassicalQM, Configuration, QueueMachine, classical_to_qm, qm_run, qm_step, qm_validate
from .reduction import lemma_prefix_oracle, qm_to_lts_spec, qm_to_stream_spec
from .rules import Spec, check_functionality, classify_rule, classify_spec, parse_spec, render_spec
from .terms import App, Signature, Var, parse_term, subst

__all__ = [
    "Ambiguous",
    "App",
    "BaseStreamEnv",
    "ClassicalQM",
    "Configuration",
    "ConsistentPrefix",
    "NoExtension",
    "QueueMachine",
    "Signature",
    "Spec",
    "StreamPrefix",
    "TreePrefix",
    "Unknown",
    "Var",
    "Witness",
    "check_axioms",
    "check_extension",
    "check_extension_diagram",
    "check_forcedness",
    "check_functionality",
    "classical_to_qm",
    "classify_rule",
    "classify_spec",
    "lemma_prefix_oracle",
    "one_step_rho",
    "parse_spec",
    "parse_term",
    "qm_run",
    "qm_step",
    "qm_to_lts_spec",
    "qm_to_stream_spec",
    "qm_validate",
    "render_spec",
    "subst",
    "unfold_lts",
    "unfold_stream",
]
