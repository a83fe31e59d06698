"""Answer models hosted by the service.

All models are deterministic per input. The stub model exists for
integration tests: it extracts the tail entity of the last context triple,
so a pipeline that retrieved the right triples gets the right answer back.
"""

from __future__ import annotations

_CONTEXT_MARKER = "context: "
_SEPARATOR = "</s>"


class StubModel:
    """Returns the last context triple's tail token sequence.

    Verbalized triples read "Head relation words Tail" with relation words
    lowercased, so the tail is the trailing run of tokens that start with
    an uppercase letter or digit (falling back to the last token).
    """

    name = "stub"

    def generate(self, text: str) -> str:
        context = text.split(_SEPARATOR, 1)[-1]
        if _CONTEXT_MARKER in context:
            context = context.split(_CONTEXT_MARKER, 1)[1]
        context = context.strip()
        if not context:
            return ""
        last_triple = context.split(". ")[-1].strip().rstrip(".")
        tokens = last_triple.split()
        if not tokens:
            return ""
        tail: list[str] = []
        for token in reversed(tokens):
            if token[0].isupper() or token[0].isdigit():
                tail.append(token)
            else:
                break
        if not tail:
            return tokens[-1]
        return " ".join(reversed(tail))


class EchoModel:
    """Returns the input unchanged (wiring tests)."""

    name = "echo"

    def generate(self, text: str) -> str:
        return text


class Seq2SeqModel:
    """Greedy decoding over a local seq2seq checkpoint (optional extra).

    Imports transformers lazily so the stub/echo paths stay dependency-free.
    """

    def __init__(self, model_path: str, max_tokens: int = 50):
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer  # deferred, heavy

        self.name = f"seq2seq:{model_path}"
        self.max_tokens = max_tokens
        self._tokenizer = AutoTokenizer.from_pretrained(model_path)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(model_path)
        self._model.eval()

    def generate(self, text: str) -> str:
        import torch

        inputs = self._tokenizer(text, return_tensors="pt", truncation=True)
        with torch.no_grad():
            output = self._model.generate(
                **inputs,
                do_sample=False,
                num_beams=1,
                max_new_tokens=self.max_tokens,
            )
        return self._tokenizer.decode(output[0], skip_special_tokens=True)


def make_model(kind: str, max_tokens: int = 50):
    """Build a model from its config string: stub, echo, or hf:<path>."""
    if kind == "stub":
        return StubModel()
    if kind == "echo":
        return EchoModel()
    if kind.startswith("hf:"):
        return Seq2SeqModel(kind[len("hf:"):], max_tokens=max_tokens)
    raise ValueError(f"unknown model kind: {kind!r} (expected stub, echo, or hf:<path>)")
