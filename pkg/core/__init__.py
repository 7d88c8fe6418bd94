# این فایل باعث میشه پوشه core به عنوان یک پکیج پایتون شناخته بشه
from .error_handler import QGNError, error_handler, safe_execute
from .lattice import LatticeSpec, PatchGraph, build_nn_patch_graph, build_single_site_patch_graph
from .gauge_network import QGN, OperatorString, expectation_string

__all__ = [
    'QGNError', 'error_handler', 'safe_execute',
    'LatticeSpec', 'PatchGraph', 'build_nn_patch_graph', 'build_single_site_patch_graph',
    'QGN', 'OperatorString', 'expectation_string',
]
