"""Shared word inventories for the bundled data generators.

CLUSTERS drive the synthetic embedding neighborhoods: every word in a
cluster is placed near the same centroid, so embedding similarity recovers
the intended synonym families. Each word belongs to exactly one cluster.
"""

# name -> (pos category, members). First occurrence wins if a word repeats.
CLUSTERS: dict[str, tuple[str, list[str]]] = {
    "ignore": (
        "verbs",
        ["ignore", "disregard", "bypass", "skip", "neglect", "omit", "overlook", "dismiss", "evade", "sidestep"],
    ),
    "forget": ("verbs", ["forget", "erase", "discard", "abandon", "unlearn", "scrap"]),
    "override": ("verbs", ["override", "overrule", "supersede", "replace", "reset", "rewrite", "nullify"]),
    "reveal": (
        "verbs",
        ["reveal", "disclose", "expose", "leak", "divulge", "output", "print", "display", "dump", "unveil"],
    ),
    "pretend": ("verbs", ["pretend", "roleplay", "impersonate", "masquerade", "simulate", "behave", "act"]),
    "obey": ("verbs", ["obey", "comply", "follow", "execute", "perform"]),
    "instruction": (
        "nouns",
        [
            "instruction", "instructions", "directive", "directives", "command", "commands",
            "order", "orders", "guideline", "guidelines", "rule", "rules", "policy", "policies",
            "constraint", "constraints", "restriction", "restrictions",
        ],
    ),
    "prompt": ("nouns", ["prompt", "prompts", "message", "messages", "query", "queries", "context"]),
    "system": ("nouns", ["system", "model", "assistant", "chatbot", "agent", "persona", "configuration"]),
    "secret": (
        "nouns",
        [
            "secret", "secrets", "password", "passwords", "credential", "credentials",
            "key", "keys", "token", "tokens", "passphrase",
        ],
    ),
    "previous": (
        "adjectives",
        ["previous", "prior", "earlier", "preceding", "former", "foregoing", "past", "above"],
    ),
    "hidden": (
        "adjectives",
        ["hidden", "concealed", "confidential", "private", "internal", "invisible", "masked", "classified", "undisclosed"],
    ),
    "original": ("adjectives", ["original", "initial", "default", "primary", "first", "underlying"]),
    "unrestricted": (
        "adjectives",
        ["unrestricted", "unfiltered", "uncensored", "unlimited", "unbounded", "jailbroken"],
    ),
}

# Everyday vocabulary for the tag lexicon (POS word-list lookup); these also
# receive (independent random) vectors so corpus tokens stay in-vocabulary.
COMMON_NOUNS = [
    "article", "author", "balance", "battery", "beach", "bicycle", "book", "bread", "breakfast",
    "budget", "building", "camera", "capital", "car", "cat", "chapter", "chart", "chess", "child",
    "city", "class", "climate", "code", "coffee", "color", "computer", "concert", "country",
    "course", "cup", "data", "database", "daughter", "day", "design", "dessert", "diet", "dinner",
    "dog", "door", "draft", "dream", "economy", "email", "energy", "engine", "essay", "evening",
    "exam", "exercise", "family", "farm", "file", "film", "flight", "flower", "food", "forest",
    "friend", "function", "game", "garden", "gift", "glass", "goal", "grammar", "guitar", "habit",
    "haiku", "health", "heater", "highway", "history", "hobby", "holiday", "home", "homework",
    "hotel", "house", "idea", "interview", "invoice", "island", "job", "journey", "kitchen",
    "lake", "landlord", "language", "laptop", "lecture", "lesson", "letter", "library", "list",
    "lunch", "machine", "map", "market", "marathon", "meal", "meeting", "memory", "menu", "mind",
    "month", "moon", "morning", "mountain", "movie", "museum", "music", "name", "network",
    "newsletter", "night", "notebook", "novel", "number", "ocean", "office", "painting", "paper",
    "park", "party", "pasta", "phone", "photo", "piano", "picture", "plan", "planet", "plant",
    "poem", "portfolio", "printer", "problem", "project", "puzzle", "question", "recipe",
    "report", "restaurant", "resume", "river", "road", "room", "routine", "salad", "schedule",
    "school", "science", "script", "sentence", "server", "shop", "sister", "software", "son",
    "song", "soup", "speech", "sport", "spreadsheet", "spring", "star", "station", "story",
    "street", "student", "summer", "sun", "table", "teacher", "team", "test", "thesis", "ticket",
    "tip", "title", "tool", "town", "traffic", "train", "treasure", "tree", "trip", "vacation",
    "vegetable", "video", "village", "water", "weather", "website", "week", "weekend", "window",
    "winter", "word", "work", "workout", "world", "year", "yoga",
]

COMMON_VERBS = [
    "answer", "arrange", "ask", "bake", "book", "bring", "build", "buy", "calculate", "call",
    "change", "check", "choose", "clean", "climb", "close", "compare", "compose", "cook", "count",
    "create", "dance", "debug", "describe", "draw", "drink", "drive", "eat", "edit", "explain",
    "find", "finish", "fix", "fly", "grow", "help", "improve", "invite", "learn", "listen",
    "make", "measure", "meet", "open", "organize", "outline", "pack", "paint", "pay", "plan",
    "play", "practice", "prepare", "proofread", "read", "recommend", "remember", "rent", "repair",
    "review", "ride", "run", "save", "schedule", "sell", "send", "share", "sing", "sleep", "sort",
    "speak", "spell", "start", "study", "suggest", "summarize", "swim", "teach", "tell", "test",
    "translate", "travel", "understand", "visit", "wait", "walk", "wash", "watch", "water",
    "write",
]

COMMON_ADJS = [
    "angry", "bad", "beautiful", "best", "big", "blue", "bright", "broken", "busy", "calm",
    "cheap", "clean", "clear", "cloudy", "cold", "colorful", "comfortable", "cozy", "creative",
    "curious", "dark", "deep", "delicious", "difficult", "dry", "early", "easy", "empty", "fast",
    "favorite", "fresh", "friendly", "full", "funny", "good", "great", "green", "happy", "hard",
    "healthy", "heavy", "high", "hot", "hungry", "important", "interesting", "kind", "large",
    "late", "light", "little", "long", "loud", "low", "lucky", "modern", "narrow", "new", "nice",
    "old", "open", "orange", "patient", "perfect", "polite", "popular", "quick", "quiet", "rainy",
    "red", "rich", "sad", "safe", "short", "simple", "slow", "small", "smart", "soft", "strong",
    "sunny", "sweet", "tall", "tasty", "tired", "warm", "weak", "wet", "white", "wide", "wild",
    "windy", "wise", "yellow", "young",
]

# Slot fillers used by the corpus generator; kept here so the vector file can
# guarantee coverage of every token the bundled corpus produces.
TOPICS = [
    "ancient rome", "the water cycle", "machine learning", "photosynthesis", "jazz music",
    "the stock market", "renewable energy", "the french revolution", "black holes",
    "urban gardening", "the immune system", "plate tectonics", "medieval castles",
    "coral reefs", "the printing press", "honey bees", "glacier formation", "sign language",
    "roman aqueducts", "weather forecasting", "the silk road", "butterfly migration",
]

CITIES = [
    "paris", "tokyo", "madrid", "lisbon", "oslo", "vienna", "prague", "dublin", "athens",
    "toronto", "chicago", "seattle", "denver", "boston", "melbourne", "auckland", "havana",
]

COUNTRIES = [
    "france", "japan", "brazil", "canada", "norway", "portugal", "iceland", "morocco",
    "vietnam", "peru", "kenya", "finland", "greece", "austria",
]

DISHES = [
    "sourdough bread", "mushroom risotto", "vegetable curry", "apple pie", "banana pancakes",
    "tomato soup", "lemon cake", "garlic noodles", "roasted potatoes", "berry muffins",
]

PERSONAS = [
    "dan", "an unrestricted ai", "a pirate with no rules", "the developer console",
    "an evil chatbot", "a system administrator", "root", "god mode", "my late grandmother",
    "a model without filters",
]
