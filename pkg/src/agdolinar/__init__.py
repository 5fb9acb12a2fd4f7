"""Receivers and error bounds for classifying ``|+alpha>`` vs ``|-alpha>`` when
``alpha`` is known only through training copies."""

__version__ = "0.1.0"
