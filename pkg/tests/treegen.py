"""Random well-formed parse trees and an independent serializer for tests."""
from semforge.parse_core import ParseNode, SeqlogicalParse

WORDS = ["a", "weather", "paris", "x", "what's", "1st", "café", "new", "york", "is", "in", "é", "zz"]
INTENTS = ["IN:GET_WEATHER", "IN:A", "IN:X_1", "IN:PLAY_MUSIC"]
SLOTS = ["SL:LOCATION", "SL:B", "SL:DATE_TIME", "SL:Y2"]


def random_tree(rng, depth=0, max_depth=4) -> SeqlogicalParse:
    return SeqlogicalParse(_intent(rng, depth, max_depth))


def _intent(rng, depth, max_depth):
    children = []
    for _ in range(rng.randrange(0, 6)):
        roll = rng.random()
        if roll < 0.6 or depth >= max_depth:
            children.append(ParseNode.token(rng.choice(WORDS)))
        elif roll < 0.9:
            children.append(_slot(rng, depth + 1, max_depth))
        else:
            children.append(_intent(rng, depth + 1, max_depth))
    return ParseNode.intent(rng.choice(INTENTS), children)


def _slot(rng, depth, max_depth):
    children = []
    for _ in range(rng.randrange(1, 4)):
        if depth < max_depth and rng.random() < 0.15:
            children.append(_intent(rng, depth + 1, max_depth))
        else:
            children.append(ParseNode.token(rng.choice(WORDS)))
    return ParseNode.slot(rng.choice(SLOTS), children)


def render(node, spacing=" ") -> str:
    """Recursive serializer, written independently of the library's iterative one."""
    if node.kind == "token":
        return node.text
    inner = spacing.join(render(c, spacing) for c in node.children)
    return f"[{node.label}{spacing}{inner}{spacing if inner else ''}]"


def slot_tokens(node, inside=False):
    """Tokens under some slot, in order (brute-force decoupled oracle)."""
    if node.kind == "token":
        return [node.text] if inside else []
    out = []
    for child in node.children:
        out.extend(slot_tokens(child, inside or node.kind == "slot"))
    return out
