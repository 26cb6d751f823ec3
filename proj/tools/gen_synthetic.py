#!/usr/bin/env python3
"""Writes the synthetic corpora and fixtures under data/.

Everything is template generated from a fixed seed, so rerunning the
script reproduces the committed files byte for byte.

    python3 tools/gen_synthetic.py [--out data] [--seed 7]
"""

import argparse
import json
import os
import random
import re

# ---------------------------------------------------------------------------
# Schema of the main corpus.

SCHEMA = [
    {
        "service_name": "Restaurants",
        "description": "Find restaurants and reserve tables",
        "slots": [
            {"name": "restaurant_name", "description": "Name of the restaurant",
             "is_categorical": False, "possible_values": []},
            {"name": "city", "description": "City where the restaurant is located",
             "is_categorical": False, "possible_values": []},
            {"name": "party_size", "description": "Number of people in the reservation",
             "is_categorical": True, "possible_values": ["1", "2", "3", "4", "5", "6"]},
            {"name": "has_live_music", "description": "Whether the restaurant has live music",
             "is_categorical": True, "possible_values": ["True", "False"]},
            {"name": "price_range", "description": "Price range of the restaurant",
             "is_categorical": True, "possible_values": ["cheap", "moderate", "expensive"]},
            {"name": "cuisine", "description": "Type of food served",
             "is_categorical": True, "possible_values": ["italian", "mexican", "chinese", "indian"]},
            {"name": "street_address", "description": "Street address of the restaurant",
             "is_categorical": False, "possible_values": []},
        ],
        "intents": [
            {"name": "FindRestaurants", "description": "Search for a restaurant by city and cuisine",
             "is_transactional": False, "required_slots": ["city", "cuisine"],
             "optional_slots": ["price_range", "has_live_music"]},
            {"name": "ReserveRestaurant", "description": "Book a table at a restaurant",
             "is_transactional": True, "required_slots": ["restaurant_name", "city", "party_size"],
             "optional_slots": []},
        ],
    },
    {
        "service_name": "Hotels",
        "description": "Search and book hotel rooms",
        "slots": [
            {"name": "hotel_name", "description": "Name of the hotel",
             "is_categorical": False, "possible_values": []},
            {"name": "city", "description": "City where the hotel is located",
             "is_categorical": False, "possible_values": []},
            {"name": "check_in_date", "description": "Date of check in",
             "is_categorical": False, "possible_values": []},
            {"name": "number_of_rooms", "description": "Number of rooms to book",
             "is_categorical": True, "possible_values": ["1", "2", "3", "4"]},
            {"name": "smoking_allowed", "description": "Whether smoking is allowed in the room",
             "is_categorical": True, "possible_values": ["True", "False"]},
            {"name": "hotel_class", "description": "Class of the hotel",
             "is_categorical": True, "possible_values": ["budget", "standard", "luxury"]},
            {"name": "phone_number", "description": "Phone number of the hotel",
             "is_categorical": False, "possible_values": []},
        ],
        "intents": [
            {"name": "SearchHotel", "description": "Find a hotel in a city",
             "is_transactional": False, "required_slots": ["city"],
             "optional_slots": ["hotel_class", "smoking_allowed"]},
            {"name": "ReserveHotel", "description": "Reserve rooms at a hotel",
             "is_transactional": True,
             "required_slots": ["hotel_name", "check_in_date", "number_of_rooms"],
             "optional_slots": ["smoking_allowed"]},
        ],
    },
    {
        "service_name": "Events",
        "description": "Find events and buy tickets",
        "slots": [
            {"name": "event_name", "description": "Name of the event",
             "is_categorical": False, "possible_values": []},
            {"name": "date", "description": "Date of the event",
             "is_categorical": False, "possible_values": []},
            {"name": "category", "description": "Category of the event",
             "is_categorical": True, "possible_values": ["Music", "Sports", "Theater"]},
            {"name": "number_of_tickets", "description": "Number of tickets to buy",
             "is_categorical": True, "possible_values": ["1", "2", "3", "4", "5"]},
        ],
        "intents": [
            {"name": "FindEvents", "description": "Look for events by category and date",
             "is_transactional": False, "required_slots": ["category"], "optional_slots": ["date"]},
            {"name": "BuyEventTickets", "description": "Buy tickets for an event",
             "is_transactional": True, "required_slots": ["event_name", "number_of_tickets"],
             "optional_slots": ["date"]},
        ],
    },
    {
        "service_name": "Payment",
        "description": "Send and request money",
        "slots": [
            {"name": "receiver", "description": "Contact who sends or receives the money",
             "is_categorical": False, "possible_values": []},
            {"name": "amount", "description": "Amount of money to transfer",
             "is_categorical": False, "possible_values": []},
            {"name": "payment_method", "description": "Source of the money",
             "is_categorical": True, "possible_values": ["app balance", "debit card", "credit card"]},
            {"name": "private_visibility", "description": "Whether the transaction is private",
             "is_categorical": True, "possible_values": ["True", "False"]},
        ],
        "intents": [
            {"name": "MakePayment", "description": "Send money to a contact",
             "is_transactional": True, "required_slots": ["receiver", "amount"],
             "optional_slots": ["payment_method", "private_visibility"]},
            {"name": "RequestPayment", "description": "Ask a contact for money",
             "is_transactional": True, "required_slots": ["receiver", "amount"],
             "optional_slots": ["private_visibility"]},
        ],
    },
]

NUM_WORDS = ["zero", "one", "two", "three", "four", "five", "six"]
CITIES = ["San Jose", "Oakland", "Portland", "Denver", "Austin", "Chicago", "Boston", "Seattle"]
RESTAURANTS = ["Blue Bottle", "Casa Verde", "Golden Lotus", "Spice Route", "Luigi's Table",
               "The Copper Pot", "Harbor Grill", "Saffron House"]
STREETS = ["123 Main Street", "45 Oak Avenue", "780 Pine Road", "9 Elm Court", "310 Lake Drive"]
HOTELS = ["Grand Plaza", "Riverside Inn", "Hotel Maple", "The Summit", "Bayview Lodge"]
DATES = ["March 3rd", "next Friday", "April 12th", "this Sunday", "May 20th", "tomorrow"]
EVENTS = ["Jazz Night", "Hamlet", "City Marathon", "Rock Fest", "The Lion King", "Derby Day"]
EVENT_CATEGORY = {"Jazz Night": "Music", "Rock Fest": "Music", "Hamlet": "Theater",
                  "The Lion King": "Theater", "City Marathon": "Sports", "Derby Day": "Sports"}
PEOPLE = ["Maria", "Jamal", "Priya", "Tom", "Keiko", "Lucas", "Ana"]
AMOUNTS = [15, 20, 35, 50, 75, 90]
METHODS = ["app balance", "debit card", "credit card"]


def slot_kind(slot):
    if not slot["is_categorical"]:
        return "span"
    vals = slot["possible_values"]
    if all(v in ("True", "False") for v in vals):
        return "boolean"
    if all(re.fullmatch(r"-?\d+", v) for v in vals):
        return "numerical"
    return "text"


class DialogueBuilder:
    """Accumulates turns and the cumulative per-service state."""

    def __init__(self, dialogue_id, schema):
        self.id = dialogue_id
        self.schema = {s["service_name"]: s for s in schema}
        self.turns = []
        self.services = []
        self.state = {}

    def _svc_state(self, service):
        if service not in self.services:
            self.services.append(service)
        return self.state.setdefault(service, {"active_intent": "NONE", "slot_values": {}})

    def user(self, utterance, service, intent=None, values=None, requested=(), variants=None):
        st = self._svc_state(service)
        if intent is not None:
            st["active_intent"] = intent
        slots_def = {s["name"]: s for s in self.schema[service]["slots"]}
        spans = []
        for name, value in (values or {}).items():
            st["slot_values"][name] = [value] + list((variants or {}).get(name, []))
            if slot_kind(slots_def[name]) == "span":
                pos = utterance.find(value)
                if pos >= 0:
                    spans.append({"slot": name, "start": pos, "exclusive_end": pos + len(value)})
        frame = {
            "service": service,
            "slots": spans,
            "actions": [],
            "state": {
                "active_intent": st["active_intent"],
                "requested_slots": sorted(requested),
                "slot_values": {k: list(v) for k, v in sorted(st["slot_values"].items())},
            },
        }
        self.turns.append({"speaker": "USER", "utterance": utterance, "frames": [frame]})

    def system(self, utterance, service, actions=()):
        acts = [{"act": a, "slot": s, "values": list(v)} for a, s, v in actions]
        self.turns.append({"speaker": "SYSTEM", "utterance": utterance,
                           "frames": [{"service": service, "actions": acts, "slots": []}]})

    def build(self):
        return {"dialogue_id": self.id, "services": self.services, "turns": self.turns}


def number_text(rng, n):
    return NUM_WORDS[n] if rng.random() < 0.6 else str(n)


def restaurant_dialogue(rng, b, close=True):
    city = rng.choice(CITIES)
    cuisine = rng.choice(["italian", "mexican", "chinese", "indian"])
    values = {"city": city, "cuisine": cuisine}
    extra = rng.random()
    if extra < 0.3:
        values["price_range"] = "cheap"
        utt = f"I'm looking for a cheap {cuisine} restaurant in {city}."
    elif extra < 0.55:
        values["has_live_music"] = "True"
        utt = f"Find me a {cuisine} place in {city} with live music."
    elif extra < 0.7:
        values["price_range"] = "dontcare"
        utt = f"I want {cuisine} food in {city}. Price doesn't matter."
    else:
        utt = f"Can you find a {cuisine} restaurant in {city}?"
    b.user(utt, "Restaurants", "FindRestaurants", values)

    name = rng.choice(RESTAURANTS)
    b.system(f"How about {name}? It is a nice place in {city}.", "Restaurants",
             [("OFFER", "restaurant_name", [name]), ("OFFER", "city", [city])])
    if rng.random() < 0.5:
        b.user("Sounds good. What is their address?", "Restaurants", None, {},
               requested=["street_address"])
        street = rng.choice(STREETS)
        b.system(f"They are at {street}.", "Restaurants", [("INFORM", "street_address", [street])])
    n = rng.randint(1, 6)
    b.user(f"Please book a table for {number_text(rng, n)} at {name}.", "Restaurants",
           "ReserveRestaurant", {"restaurant_name": name, "party_size": str(n)})
    if close:
        b.system(f"Booking a table at {name} for {n}. Shall I go ahead?", "Restaurants",
                 [("CONFIRM", "restaurant_name", [name]), ("CONFIRM", "party_size", [str(n)])])
        b.user("Yes, thank you.", "Restaurants")


def hotel_dialogue(rng, b, close=True):
    city = rng.choice(CITIES)
    values = {"city": city}
    if rng.random() < 0.5:
        cls = rng.choice(["budget", "standard", "luxury"])
        values["hotel_class"] = cls
        utt = f"I need a {cls} hotel in {city}."
    else:
        utt = f"Are there any hotels in {city}?"
    b.user(utt, "Hotels", "SearchHotel", values)
    hotel = rng.choice(HOTELS)
    b.system(f"{hotel} has rooms available. Would that work?", "Hotels",
             [("OFFER", "hotel_name", [hotel])])
    n = rng.randint(1, 4)
    date = rng.choice(DATES)
    b.user(f"Yes, reserve {number_text(rng, n)} rooms at {hotel} from {date}.", "Hotels",
           "ReserveHotel", {"hotel_name": hotel, "number_of_rooms": str(n), "check_in_date": date})
    b.system("Do you want a smoking room?", "Hotels", [("REQUEST", "smoking_allowed", [])])
    if rng.random() < 0.5:
        b.user("No, non-smoking please.", "Hotels", None, {"smoking_allowed": "False"})
    else:
        b.user("Yes, smoking is fine.", "Hotels", None, {"smoking_allowed": "True"})
    if close:
        b.system(f"Done. Your rooms at {hotel} are booked.", "Hotels",
                 [("NOTIFY_SUCCESS", "", [])])
        b.user("What is the phone number of the hotel?", "Hotels", None, {},
               requested=["phone_number"])


def events_dialogue(rng, b, close=True):
    event = rng.choice(EVENTS)
    category = EVENT_CATEGORY[event]
    date = rng.choice(DATES)
    if rng.random() < 0.25:
        b.user(f"What events are on {date}? Any kind is fine.", "Events", "FindEvents",
               {"date": date, "category": "dontcare"})
    else:
        b.user(f"Find me a {category.lower()} event on {date}.", "Events", "FindEvents",
               {"date": date, "category": category})
    b.system(f"There is {event} on {date}.", "Events",
             [("OFFER", "event_name", [event]), ("OFFER", "date", [date])])
    n = rng.randint(1, 5)
    b.user(f"Get me {number_text(rng, n)} tickets for {event}.", "Events", "BuyEventTickets",
           {"event_name": event, "number_of_tickets": str(n)})
    if close:
        b.system("Your tickets are booked.", "Events", [("NOTIFY_SUCCESS", "", [])])
        b.user("Thanks, that's all.", "Events")


def payment_dialogue(rng, b, switch=None):
    who = rng.choice(PEOPLE)
    amount = f"{rng.choice(AMOUNTS)} dollars"
    method = rng.choice(METHODS)
    b.user(f"Send {amount} to {who} from my {method}.", "Payment", "MakePayment",
           {"receiver": who, "amount": amount, "payment_method": method})
    b.system("Should the transaction be private?", "Payment",
             [("CONFIRM", "private_visibility", ["True"])])
    if rng.random() < 0.5:
        b.user("Yes, keep it private.", "Payment", None, {"private_visibility": "True"})
    else:
        b.user("No, it can be public.", "Payment", None, {"private_visibility": "False"})
    if switch is None:
        switch = rng.random() < 0.5
    if switch:
        b.system(f"Sending {amount} to {who}. Is that right?", "Payment",
                 [("CONFIRM", "receiver", [who]), ("CONFIRM", "amount", [amount])])
        # Intent switch: the user asks for money instead.
        b.user(f"Actually, request the money from {who} instead.", "Payment", "RequestPayment",
               {"receiver": who})
    return who, amount


def main_corpus(rng, count, prefix):
    makers = [restaurant_dialogue, hotel_dialogue, events_dialogue, payment_dialogue]
    out = []
    for i in range(count):
        b = DialogueBuilder(f"{prefix}_{i:03d}", SCHEMA)
        first = makers[i % 4]
        if i % 5 == 4 and first is not payment_dialogue:
            # Two services: the second frame starts mid-dialogue.
            first(rng, b, close=False)
            b.system("Anything else?", b.services[-1])
            payment_dialogue(rng, b)
        else:
            first(rng, b)
        out.append(b.build())
    return out


def reset_fixture():
    b = DialogueBuilder("reset_000", SCHEMA)
    b.user("I need to send 50 dollars to Maria.", "Payment", "MakePayment",
           {"receiver": "Maria", "amount": "50 dollars"})
    b.system("Which payment method should I use?", "Payment",
             [("REQUEST", "payment_method", [])])
    b.user("Actually, request money from Maria instead.", "Payment", "RequestPayment",
           {"receiver": "Maria"})
    return [b.build()]


# ---------------------------------------------------------------------------
# Metric fixture: three dialogues with known errors. The expected numbers
# are worked out by hand in the metrics test.

def metric_fixture():
    def frame(service, intent, requested, values):
        return {"service": service, "actions": [], "slots": [],
                "state": {"active_intent": intent, "requested_slots": requested,
                          "slot_values": values}}

    def sys_turn(service, utt):
        return {"speaker": "SYSTEM", "utterance": utt,
                "frames": [{"service": service, "actions": [], "slots": []}]}

    def user_turn(utt, fr):
        return {"speaker": "USER", "utterance": utt, "frames": [fr]}

    gold = [
        {"dialogue_id": "fx_a", "services": ["Restaurants"], "turns": [
            user_turn("Italian food in San Jose please.",
                      frame("Restaurants", "FindRestaurants", [],
                            {"city": ["San Jose"], "cuisine": ["italian"]})),
            sys_turn("Restaurants", "Blue Bottle is nice."),
            user_turn("Book Blue Bottle for two. Where is it?",
                      frame("Restaurants", "ReserveRestaurant", ["street_address"],
                            {"city": ["San Jose"], "cuisine": ["italian"],
                             "restaurant_name": ["Blue Bottle"], "party_size": ["2"]})),
        ]},
        {"dialogue_id": "fx_b", "services": ["Hotels"], "turns": [
            user_turn("A luxury hotel in Paris.",
                      frame("Hotels", "SearchHotel", [],
                            {"city": ["Paris"], "hotel_class": ["luxury"]})),
        ]},
        {"dialogue_id": "fx_c", "services": ["Payment"], "turns": [
            user_turn("I want to make a payment.", frame("Payment", "MakePayment", [], {})),
            sys_turn("Payment", "To whom?"),
            user_turn("Send 50 dollars to Maria Lopez.",
                      frame("Payment", "MakePayment", [],
                            {"receiver": ["Maria", "Maria Lopez"], "amount": ["50 dollars"]})),
        ]},
    ]
    pred = json.loads(json.dumps(gold))
    a, b, c = pred
    a["turns"][0]["frames"][0]["state"]["slot_values"]["city"] = ["San Jos"]
    st = a["turns"][2]["frames"][0]["state"]
    st["active_intent"] = "FindRestaurants"
    st["requested_slots"] = ["price_range", "street_address"]
    st["slot_values"]["restaurant_name"] = ["blue bottle"]
    st["slot_values"]["party_size"] = ["3"]
    b["turns"][0]["frames"][0]["state"]["slot_values"]["smoking_allowed"] = ["True"]
    st = c["turns"][2]["frames"][0]["state"]
    st["active_intent"] = "NONE"
    st["requested_slots"] = ["payment_method"]
    st["slot_values"] = {"receiver": ["Maria Lopez"], "amount": ["15 dollars"]}
    return gold, pred


# ---------------------------------------------------------------------------
# Separable sets for the learnability checks.

TRAVEL_SCHEMA = [{
    "service_name": "Travel",
    "description": "Plan trips",
    "slots": [{"name": "destination", "description": "Destination of the trip",
               "is_categorical": False, "possible_values": []}],
    "intents": [{"name": "PlanTrip", "description": "Plan a trip", "is_transactional": False,
                 "required_slots": ["destination"], "optional_slots": []}],
}]

PLACES = ["zorvania", "quellport", "brastow", "mirelle", "tannok", "vexhollow", "oriskan",
          "palumbe", "drevnik", "sollaria", "kestrum", "yavalon", "ferrisk", "umbrane",
          "gildora", "nashtel", "corvane", "lumeria", "thessik", "ardwyn", "belcastro",
          "pyrenth", "wolvane", "ismaro", "rendale", "scathmoor", "ulvika", "merrow",
          "halvoss", "ostrenne"]
TRAVEL_LEAD = ["I want to travel to", "Book me a trip to", "Take me to", "I'd love to visit",
               "Plan a vacation to", "We are flying to"]
TRAVEL_TAIL = ["next week.", "soon.", "this summer.", "with my family.", "please.", "for a few days."]
TRAVEL_NONE = ["I want to plan a trip.", "Can you help me plan a vacation?",
               "I need a holiday somewhere.", "Let's plan a trip for next week."]


def mrc_separable(rng, count):
    out = []
    for i in range(count):
        b = DialogueBuilder(f"mrc_{i:03d}", TRAVEL_SCHEMA)
        if rng.random() < 0.15:
            b.user(rng.choice(TRAVEL_NONE), "Travel", "PlanTrip")
        else:
            place = rng.choice(PLACES).capitalize()
            b.user(f"{rng.choice(TRAVEL_LEAD)} {place} {rng.choice(TRAVEL_TAIL)}", "Travel",
                   "PlanTrip", {"destination": place})
        out.append(b.build())
    return out


MUSIC_SCHEMA = [{
    "service_name": "Media",
    "description": "Play music",
    "slots": [{"name": "genre", "description": "Genre of the music",
               "is_categorical": True,
               "possible_values": ["rock", "jazz", "pop", "classical", "country", "blues"]}],
    "intents": [{"name": "PlaySong", "description": "Play a song", "is_transactional": True,
                 "required_slots": [], "optional_slots": ["genre"]}],
}]


def wd_separable(rng, count):
    genres = MUSIC_SCHEMA[0]["slots"][0]["possible_values"]
    leads = ["Play some {} music.", "I feel like listening to {}.", "Put on a {} song please.",
             "Can you play {} for me?"]
    out = []
    for i in range(count):
        b = DialogueBuilder(f"wd_{i:03d}", MUSIC_SCHEMA)
        r = rng.random()
        if r < 0.12:
            b.user("Play any song, I don't care which genre.", "Media", "PlaySong",
                   {"genre": "dontcare"})
        elif r < 0.22:
            b.user("Play a song.", "Media", "PlaySong")
        else:
            g = rng.choice(genres)
            b.user(rng.choice(leads).format(g), "Media", "PlaySong", {"genre": g})
        out.append(b.build())
    return out


# The boolean's value is only recoverable from the system action: the
# system utterance is generic, and the user just agrees or disagrees.
RIDE_SCHEMA = [{
    "service_name": "RideSharing",
    "description": "Book taxi rides",
    "slots": [{"name": "shared_ride", "description": "Whether the ride is shared with others",
               "is_categorical": True, "possible_values": ["True", "False"]}],
    "intents": [{"name": "GetRide", "description": "Book a cab", "is_transactional": True,
                 "required_slots": [], "optional_slots": ["shared_ride"]}],
}]


def ablation(rng, count, prefix):
    asks = ["I need a ride to the airport.", "Get me a cab downtown.", "Book a taxi home.",
            "I need a car to the station."]
    checks = ["Just to double check, is that right?", "Shall I go with that?",
              "Can you confirm this?", "Is this what you want?"]
    yes = ["Yes.", "Yes, that works.", "Yeah, correct.", "Sure."]
    no = ["No.", "No, that's wrong.", "Nope.", "Nah, the other way."]
    out = []
    for i in range(count):
        b = DialogueBuilder(f"{prefix}_{i:03d}", RIDE_SCHEMA)
        b.user(rng.choice(asks), "RideSharing", "GetRide")
        confirmed = rng.choice(["True", "False"])
        b.system(rng.choice(checks), "RideSharing", [("CONFIRM", "shared_ride", [confirmed])])
        if rng.random() < 0.5:
            b.user(rng.choice(yes), "RideSharing", None, {"shared_ride": confirmed})
        else:
            flipped = "False" if confirmed == "True" else "True"
            b.user(rng.choice(no), "RideSharing", None, {"shared_ride": flipped})
        out.append(b.build())
    return out


# ---------------------------------------------------------------------------
# Provider caches for the lexicon. The schema terms mirror LexiconTerms().

STOPWORDS = set("""a an the of to in on for and or is are was be by with at from as it its this
that which who whom whose what when where how whether if not no yes do does did has have had
can will would should there their they them he she his her you your we our i me my any all
some one per into about than then also such user system name number type other being been""".split())

SYNONYMS = {
    "theater": ["broadway", "drama", "stage", "cinema", "acting", "performing", "the stage",
                "show business", "the third acts", "surgery"],
    "music": ["concert", "song", "melody", "tune", "gig", "band"],
    "sports": ["game", "match", "athletics", "tournament"],
    "restaurant": ["eatery", "diner", "bistro", "place to eat"],
    "city": ["town", "municipality", "metropolis"],
    "located": ["situated", "placed", "based"],
    "people": ["persons", "guests", "folks"],
    "reservation": ["booking", "table"],
    "live": ["in person", "on stage"],
    "price": ["cost", "rate"],
    "range": ["band", "level"],
    "cheap": ["inexpensive", "budget", "affordable", "low cost"],
    "moderate": ["reasonable", "mid-range", "average"],
    "expensive": ["pricey", "costly", "upscale", "fancy"],
    "food": ["cuisine", "dishes", "meals"],
    "served": ["offered", "provided"],
    "italian": ["pasta", "pizza"],
    "mexican": ["tacos", "tex-mex"],
    "chinese": ["dim sum", "cantonese"],
    "indian": ["curry", "tandoori"],
    "hotel": ["inn", "lodge", "motel", "lodging"],
    "date": ["day", "time"],
    "check": ["verify"],
    "rooms": ["suites", "bedrooms"],
    "book": ["reserve", "schedule"],
    "smoking": ["cigarettes", "tobacco"],
    "allowed": ["permitted", "ok"],
    "room": ["suite", "bedroom"],
    "class": ["rating", "grade", "category"],
    "budget": ["cheap", "economy"],
    "standard": ["regular", "normal"],
    "luxury": ["upscale", "five star", "deluxe"],
    "phone": ["telephone", "contact"],
    "street": ["road", "avenue"],
    "address": ["location", "directions"],
    "event": ["show", "happening", "occasion"],
    "category": ["kind", "sort"],
    "tickets": ["passes", "seats"],
    "buy": ["purchase", "get"],
    "contact": ["friend", "person"],
    "sends": ["transfers", "pays"],
    "receives": ["gets", "collects"],
    "money": ["cash", "funds"],
    "amount": ["sum", "total"],
    "transfer": ["send", "move"],
    "source": ["origin", "account"],
    "app balance": ["wallet", "in-app funds"],
    "debit card": ["bank card"],
    "credit card": ["visa", "mastercard"],
    "transaction": ["payment", "transfer"],
    "private": ["hidden", "personal", "confidential"],
}

BACK_TRANSLATION = {
    "theater": ["theatre", "playhouse"],
    "cheap": ["not expensive", "low price"],
    "expensive": ["high price", "dear"],
    "luxury": ["luxurious", "high end"],
    "private": ["not public", "secret"],
    "music": ["musical"],
    "restaurant": ["restaurants", "eating place"],
}


def content_words(text):
    out = []
    for tok in re.findall(r"[a-z0-9\x80-\uffff]+|[^\sa-z0-9]", text.lower()):
        if len(tok) < 3 or tok in STOPWORDS or not re.fullmatch(r"[a-z0-9\x80-\uffff]+", tok):
            continue
        if tok not in out:
            out.append(tok)
    return out


def lexicon_terms(schema):
    terms = []
    for svc in schema:
        for slot in svc["slots"]:
            for w in content_words(slot["description"]):
                if w not in terms:
                    terms.append(w)
            if slot_kind(slot) == "text":
                for v in slot["possible_values"]:
                    v = " ".join(v.lower().split())
                    if v not in terms:
                        terms.append(v)
    return terms


def write_cache(path, provider, table, terms):
    lines = [f"# cache for provider {provider}"]
    for t in terms:
        exps = table.get(t, [])
        if not exps:
            lines.append(f"{t}\t\t{provider}\t0")
        for rank, e in enumerate(exps):
            lines.append(f"{t}\t{e}\t{provider}\t{1.0 - 0.05 * rank:.2f}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------

def dump(path, obj):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, ensure_ascii=False)
        f.write("\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = os.path.normpath(args.out)

    dump(f"{out}/sgd/schema.json", SCHEMA)
    dump(f"{out}/sgd/oracle_dialogues.json", main_corpus(random.Random(args.seed), 20, "oracle"))
    dump(f"{out}/sgd/train_dialogues.json", main_corpus(random.Random(args.seed + 1), 50, "train"))
    dump(f"{out}/sgd/dev_dialogues.json", main_corpus(random.Random(args.seed + 2), 12, "dev"))
    dump(f"{out}/reset/dialogues.json", reset_fixture())
    dump(f"{out}/reset/rules.json",
         [{"service": "Payment", "trigger": "intent-switch", "scope": "clear-prior-history"}])

    gold, pred = metric_fixture()
    dump(f"{out}/metrics_fixture/gold.json", gold)
    dump(f"{out}/metrics_fixture/pred.json", pred)
    dump(f"{out}/metrics_fixture/train_schema.json", SCHEMA[:2])

    dump(f"{out}/mrc_separable/schema.json", TRAVEL_SCHEMA)
    dump(f"{out}/mrc_separable/dialogues.json", mrc_separable(random.Random(args.seed + 10), 200))
    dump(f"{out}/wd_separable/schema.json", MUSIC_SCHEMA)
    dump(f"{out}/wd_separable/dialogues.json", wd_separable(random.Random(args.seed + 11), 150))
    dump(f"{out}/ablation/schema.json", RIDE_SCHEMA)
    dump(f"{out}/ablation/train.json", ablation(random.Random(args.seed + 12), 120, "abl_train"))
    dump(f"{out}/ablation/test.json", ablation(random.Random(args.seed + 13), 80, "abl_test"))

    terms = lexicon_terms(SCHEMA)
    os.makedirs(f"{out}/lexicon", exist_ok=True)
    write_cache(f"{out}/lexicon/synonym_api.tsv", "synonym_api", SYNONYMS, terms)
    write_cache(f"{out}/lexicon/back_translation.tsv", "back_translation", BACK_TRANSLATION, terms)
    missing = [t for t in terms if t not in SYNONYMS]
    if missing:
        print("terms without synonym-api expansions:", ", ".join(missing))


if __name__ == "__main__":
    main()
