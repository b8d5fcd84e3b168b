"""Closed word lists and lemma exceptions for the rule-based engine."""

DETERMINERS = frozenset("""
a an the this that these those some any each every no two three four five
six seven eight nine ten several few many more most both another other one
his her its their
""".split())

PRONOUNS = frozenset({"they", "he", "she", "his", "her", "it"})

#: prepositions opening an instrument/benefactor phrase
ARG2_PREPOSITIONS = frozenset({"with", "to", "for", "into", "onto", "from"})

#: prepositions opening a location phrase
LOC_PREPOSITIONS = frozenset({
    "on", "in", "at", "near", "over", "under", "beside", "behind", "inside",
    "outside", "across", "along", "above", "below", "beneath", "by",
})

AUXILIARIES = frozenset("""
is are was were be been being has have had will would shall should can
could may might must does did do
""".split())

PARTICLES = frozenset({"up", "down", "off", "out", "away", "back", "around", "together"})

CONJUNCTIONS = frozenset({"and", "then", "while", "as", "before", "after", "but", "or"})

PERSON_NOUNS = frozenset("""
man woman person boy girl guy lady child kid baby men women people children
player athlete worker chef cook singer dancer musician teacher student
instructor gymnast swimmer runner climber driver rider skater surfer barber
couple team crowd family friend friends group
""".split())

#: verb lemmas recognized by the tagger; inflections are reduced to these
VERB_LEMMAS = frozenset("""
cut move lift throw pick play kick hold wash carry push pull drop open grab
walk run sit stand jump climb dance sing eat drink cook clean wipe pour fill
empty place put take give show point look watch talk speak smile laugh wave
clap shake bend stretch fold tie untie wear remove enter leave exit ride
drive paddle swim surf ski skate slide swing hit strike catch toss roll
bounce spin turn flip brush comb mix stir chop slice peel grate spread
sprinkle squeeze measure weigh close lower raise hang attach wrap shave trim
mow rake dig plant water sweep vacuum iron sew knit paint draw write read
type scroll press tap lie kneel crouch lean step march hop skip crawl chase
kiss hug punch block serve bowl pitch bat dribble shoot score juggle balance
stack arrange adjust fix repair build assemble pose stare glance nod wink
blow whistle hum chew sip bite lick smell snap film record photograph
start end begin stop lead demonstrate do be get go come make see say tell
use work try call ask feed pet groom saddle mount dismount row steer park
load unload pack unpack zip unzip button unbutton buckle
""".split())

IRREGULAR_VERB_LEMMAS = {
    "went": "go", "gone": "go", "goes": "go",
    "sat": "sit", "ran": "run", "took": "take", "taken": "take",
    "threw": "throw", "thrown": "throw", "held": "hold", "stood": "stand",
    "ate": "eat", "eaten": "eat", "drank": "drink", "drunk": "drink",
    "gave": "give", "given": "give", "made": "make", "said": "say",
    "saw": "see", "seen": "see", "came": "come", "got": "get", "did": "do",
    "done": "do", "lay": "lie", "lain": "lie", "wrote": "write",
    "written": "write", "drew": "draw", "drawn": "draw", "hit": "hit",
    "put": "put", "read": "read", "left": "leave", "drove": "drive",
    "driven": "drive", "rode": "ride", "ridden": "ride", "swam": "swim",
    "swum": "swim", "hung": "hang", "swept": "sweep", "knelt": "kneel",
    "wore": "wear", "worn": "wear", "caught": "catch", "struck": "strike",
    "spun": "spin", "dug": "dig", "led": "lead", "fed": "feed",
    "is": "be", "are": "be", "was": "be", "were": "be", "been": "be",
    "being": "be", "has": "have", "had": "have", "am": "be",
}

IRREGULAR_NOUN_LEMMAS = {
    "men": "man", "women": "woman", "people": "person", "children": "child",
    "knives": "knife", "feet": "foot", "teeth": "tooth", "leaves": "leaf",
    "shelves": "shelf", "loaves": "loaf", "scarves": "scarf",
    "dishes": "dish", "glasses": "glass", "boxes": "box", "brushes": "brush",
    "benches": "bench", "couches": "couch", "matches": "match",
}
