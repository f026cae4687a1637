"""Embedded per-language label tables and the language registry.

The tables ship as static data so golden tests stay hermetic. English is the
canonical language for every task: a record's label field must be one of the
English strings, and index i in any other language translates index i in
English. A None entry means the language is part of the task's evaluation set
but has no published target-language labels; label_map raises for those.
"""

from __future__ import annotations

TASKS = ("sentiment", "topic", "nli")

CANONICAL_LANG = "eng"

# task -> language code -> ordered label list (None: no target labels exist)
LABEL_TABLES: dict[str, dict[str, list[str] | None]] = {
    "topic": {
        "eng": ["business", "entertainment", "health", "politics", "religion", "sports", "technology"],
        "amh": None,
        "hau": ["kasuwanci", "nishadi", "lafiya", "siyasa", "addini", "wasanni", "fasaha"],
        "ibo": ["azumahia", "nturundu", "ahuike", "ndoro ndoro ochichi", "okpukpere chi", "egwuregwu", "teknuzu"],
        "lug": ["bizinensi", "okwesanyusa", "obulamu", "ebyobufuzi", "eddiini", "ebyemizannyo", "tekinolojiya"],
        "pcm": ["business", "entertainment", "health", "politics", "religion", "sports", "technology"],
        "sna": ["business", "varaidzo", "utano", "zvematongerwo enyika", "chitendero", "mitambo", "teknolojia"],
        "swa": ["biashara", "burudani", "afya", "siasa", "dini", "michezo", "teknolojia"],
        "xho": ["ishishini", "ukuzonwabisa", "impilo", "kwezopolitiko", "unqulo", "ezemidlalo", "iteknoloji"],
        "yor": ["iṣowo", "Idanilaraya", "ilera", "oselu", "esin", "idaraya", "ona ero"],
    },
    "sentiment": {
        "eng": ["negative", "neutral", "positive"],
        # Tweet sentiment languages (Arabic and Hindi have no published label strings)
        "arb": None,
        "hin": None,
        "fra": ["négatif", "neutre", "positif"],
        "deu": ["negativ", "neutral", "positiv"],
        "ita": ["negativo", "neutro", "positivo"],
        "por": ["negativo", "neutro", "positivo"],
        "spa": ["negativo", "neutral", "positivo"],
        # Indonesian regional languages share one label set
        "ind": ["negatif", "netral", "positif"],
        "btk": ["negatif", "netral", "positif"],
        "sun": ["negatif", "netral", "positif"],
        "jav": ["negatif", "netral", "positif"],
        "mad": ["negatif", "netral", "positif"],
        "mak": ["negatif", "netral", "positif"],
        "min": ["negatif", "netral", "positif"],
    },
    "nli": {
        "eng": ["entailment", "neutral", "contradiction"],
        "spa": ["vinculación", "neutral", "contradicción"],
        "aym": ["vinculación", "niwtrala", "contradicción"],
        "bzd": None,
        "cni": None,
        "grn": ["vinculación", "ñemombyte", "contradicción"],
        "hch": None,
        "nah": None,
        "oto": ["vinculación", "neutral", "contradicción"],
        "quy": ["hukllanakuy", "chawpi", "contradicción"],
        "shp": None,
        "tar": None,
    },
}

# language code -> display name, for every language that can appear in prompts
LANGUAGE_NAMES: dict[str, str] = {
    "eng": "English",
    "ind": "Indonesian",
    "btk": "Batak",
    "sun": "Sundanese",
    "jav": "Javanese",
    "mad": "Madurese",
    "mak": "Makassarese",
    "min": "Minangkabau",
    "amh": "Amharic",
    "hau": "Hausa",
    "ibo": "Igbo",
    "lug": "Luganda",
    "pcm": "Nigerian Pidgin",
    "sna": "chiShona",
    "swa": "Kiswahili",
    "xho": "isiXhosa",
    "yor": "Yorùbá",
    "aym": "Aymara",
    "bzd": "Bribri",
    "cni": "Asháninka",
    "grn": "Guaraní",
    "hch": "Wixarika",
    "nah": "Nahuatl",
    "oto": "Otomí",
    "quy": "Quechua",
    "shp": "Shipibo-Konibo",
    "tar": "Rarámuri",
    "arb": "Arabic",
    "fra": "French",
    "deu": "German",
    "hin": "Hindi",
    "ita": "Italian",
    "por": "Portuguese",
    "spa": "Spanish",
}
