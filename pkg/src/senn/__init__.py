"""Super-enhancer classification with small hand-written neural networks.

Two models (a dense network and a 1-D convolutional network) are trained
from scratch with numpy and evaluated by stratified k-fold cross-validation
over genomic / epigenomic feature subsets.
"""

__version__ = "0.1.0"
