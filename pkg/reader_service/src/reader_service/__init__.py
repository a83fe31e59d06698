"""Minimal HTTP reader service answering question+context inputs."""

from .models import EchoModel, Seq2SeqModel, StubModel, make_model
from .server import ReaderHTTPServer, main, serve

__version__ = "0.1.0"
