import hashlib
from pathlib import Path
from typing import Union, Iterator, Any

def file_digest(path: Union[str, Path], algorithm: str = "sha256") -> str:
    """Hex digest of a file's bytes, read in blocks"""
    h = hashlib.new(algorithm)
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()

def bytes_digest(content: bytes, algorithm: str = "sha256") -> str:
    return hashlib.new(algorithm, content).hexdigest()

def read_bytes(path_or_content: Union[str, Path, bytes]) -> bytes:
    """Accept raw bytes, or a path to read them from"""
    if isinstance(path_or_content, bytes):
        return path_or_content
    with open(path_or_content, "rb") as fh:
        return fh.read()

def decode_utf8(content: Union[bytes, str]) -> tuple[Union[str, None], Union[int, None]]:
    """Decode UTF-8 content without raising.

    Returns
    -------
    text : str or None
        Decoded text, None if the bytes were invalid
    line : int or None
        1-based line number of the first invalid byte
    """
    if isinstance(content, str):
        return content, None
    try:
        return content.decode("utf-8"), None
    except UnicodeDecodeError as e:
        return None, content[:e.start].count(b"\n") + 1

def izip_missing(iterA: Iterator[Any], iterB: Iterator[Any], **kwds) -> Iterator[tuple[Any, Any]]:
    """Iterate through two iterables, while making sure they are in the same
    order. If there are missing values, you can skip the value entirely or
    return only the iterator with the value and a special fill value.

    Parameters
    ----------
    iterA : the first iterator, sorted by key
    iterB : the second iterator, sorted by key
    key : function that returns items to compare. Must return strings, ints, or
        an object with the __lt__, __gt__, and __eq__ methods. Optional.
    fillvalue : The value to return if the item is missing. Optional.

    Returns
    -------
    A : item from first iterator, or fillValue
    B : item from second iterator, or fillValue

    >>> list(izip_missing(iter(["a", "c"]), iter(["a", "b"]), fillvalue=None))
    [('a', 'a'), (None, 'b'), ('c', None)]
    """
    key = kwds.get("key", lambda x: x)
    keyA = kwds.get("keyA", key)
    keyB = kwds.get("keyB", key)

    useMissing = "fillvalue" in kwds
    fillvalue = kwds.get("fillvalue")

    sentinel = object()
    A = next(iterA, sentinel)
    B = next(iterB, sentinel)
    while A is not sentinel and B is not sentinel:
        if keyA(A) == keyB(B):
            yield A, B
            A = next(iterA, sentinel)
            B = next(iterB, sentinel)
        elif keyA(A) < keyB(B):
            if useMissing:
                yield A, fillvalue
            A = next(iterA, sentinel)
        elif keyA(A) > keyB(B):
            if useMissing:
                yield fillvalue, B
            B = next(iterB, sentinel)
        else:
            raise RuntimeError("Invalid comparator")

    #Drain whichever side is left
    if useMissing:
        while A is not sentinel:
            yield A, fillvalue
            A = next(iterA, sentinel)
        while B is not sentinel:
            yield fillvalue, B
            B = next(iterB, sentinel)

def pct(numerator: float, denominator: float) -> float:
    """Percentage rounded to 2 decimals, 0 when the denominator is 0"""
    if denominator == 0:
        return 0.0
    return round(100. * numerator / denominator, 2)

def ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0
