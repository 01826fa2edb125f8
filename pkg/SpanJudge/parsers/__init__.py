from pathlib import Path
modules = Path(__file__).parent.glob("*.py")
__all__ = [f.stem for f in modules if f.is_file() and not f.stem.startswith("_")]


from SpanJudge.common.corpus import Corpus, Source

def read_corpus(path: str, format: str = "iob", scheme: str = "iob2", source: Source = Source.GOLD, n_jobs: int = 1) -> Corpus:
    """Read a corpus file in either supported format"""
    if format == "iob":
        from SpanJudge.parsers.iob import read_iob
        return read_iob(path, scheme=scheme, source=source, n_jobs=n_jobs)
    elif format == "standoff":
        from SpanJudge.parsers.standoff import read_standoff
        return read_standoff(path)
    else:
        raise ValueError("Invalid corpus format {} (iob, standoff)".format(format))
