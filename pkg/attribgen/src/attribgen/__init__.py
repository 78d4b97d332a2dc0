"""Attribution heatmap generation for torch image models.

Six methods (saliency, integrated gradients, smoothgrad, guided
backprop, grad-cam, lime) plus a model server speaking the evaluation
engine's request protocol over stdio or HTTP.
"""

from .errors import ConfigError, DataError, GenError, ModelError
from .interchange import discover_rasters, load_labels, load_raster, \
    write_heatmap
from .methods import gradcam, guided_backprop, integrated_gradients, lime, \
    predict_probs, saliency, smoothgrad
from .modelio import find_conv_layer, load_model
from .serve import handle_request, make_http_server, serve_http, serve_stdio

__all__ = [
    "ConfigError",
    "DataError",
    "GenError",
    "ModelError",
    "discover_rasters",
    "find_conv_layer",
    "gradcam",
    "guided_backprop",
    "handle_request",
    "integrated_gradients",
    "lime",
    "load_labels",
    "load_model",
    "load_raster",
    "make_http_server",
    "predict_probs",
    "saliency",
    "serve_http",
    "serve_stdio",
    "smoothgrad",
    "write_heatmap",
]

__version__ = "0.1.0"
