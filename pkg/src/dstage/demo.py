"""Deterministic synthetic provider.

A pure function of the request: given the same prompt it always answers
the same text, which makes it suitable for recording the replay fixtures
shipped with the package and for offline tests. It carries a scripted
Cuban-missile-crisis scenario (full candidate scripts, a cast, 13 days
of decisions and judge trajectories, plus a hawkish-Kennedy variant
triggered by the persona constraint) and generic fallbacks for any other
scenario.

Regenerate the shipped fixtures with ``scripts/make_cuban_fixtures.py``
after changing prompt templates.
"""

from __future__ import annotations

import hashlib
import json
import re

from .gateway import CompletionRequest

CUBAN_TAG = "cuban-missile-crisis"

PERSPECTIVE_INDEX = {
    "research objectives": 0,
    "variable design": 1,
    "operational process": 2,
    "expected outcomes": 3,
}

# -- candidate script content ------------------------------------------------

GOALS = {
    0: "Determine which combinations of blockade posture, back-channel diplomacy and military readiness maximize the probability that the October 1962 missile standoff ends without war.",
    1: "Quantify how operational, diplomatic and environmental influence factors shift the distribution over peace, limited conflict, conventional war and nuclear war across the 13-day missile crisis.",
    2: "Reproduce the day-by-day decision process of the October 1962 crisis and measure how each procedural lever changes the engagement outcome distribution.",
    3: "Test whether a day-tick simulation of the 1962 missile crisis reproduces the historical outcome of peaceful resolution under documented decision patterns.",
}

SUCCESS_CRITERIA = {
    0: ["war-outcome distribution computed for every design point", "sensitivity ranking of the three levers produced"],
    1: ["all influence factors exercised by at least one design point", "daily response-variable series recorded for 13 days"],
    2: ["every procedural lever toggled at least once", "engagement outcomes classified for each run"],
    3: ["final outcome category compared against the historical record", "daily tension trajectory recorded"],
}

# Winner candidate (perspective "variable design"): 29 factors, 4 responses.
WINNER_FACTORS: list[tuple[str, str, list]] = [
    ("us_blockade_posture", "How the naval quarantine is announced and enforced", ["announce_and_enforce", "enforce_quietly", "delay_blockade"]),
    ("us_airstrike_readiness", "Preparation state of the strike package against missile sites", ["low", "staged", "imminent"]),
    ("us_invasion_preparation", "Mobilization of amphibious invasion forces", ["none", "mobilized", "landing_ready"]),
    ("us_defcon_level", "United States defense readiness condition", [4, 3, 2]),
    ("us_un_strategy", "How the United States uses the Security Council", ["present_evidence", "private_pressure", "abstain"]),
    ("us_backchannel_intensity", "Use of informal channels to the Soviet leadership", ["dormant", "active", "continuous"]),
    ("us_turkey_missile_stance", "Willingness to trade missiles based in Turkey", ["refuse_trade", "private_trade", "public_trade"]),
    ("us_press_management", "Information policy toward the press", ["full_disclosure", "staged_briefings", "strict_secrecy"]),
    ("us_allied_coordination", "Sequencing of allied consultation", ["unilateral", "oas_first", "nato_first"]),
    ("ussr_deployment_pace", "Construction tempo at the missile sites", ["paused", "steady", "accelerated"]),
    ("ussr_ship_orders", "Orders to cargo ships approaching the quarantine line", ["turn_back", "hold_position", "run_blockade"]),
    ("ussr_submarine_posture", "Tasking of submarines near the line", ["recalled", "shadowing", "aggressive"]),
    ("ussr_negotiation_stance", "Tone of Soviet diplomacy", ["conciliatory", "transactional", "defiant"]),
    ("ussr_public_messaging", "Public line on the deployment", ["denial", "ambiguity", "open_acknowledgment"]),
    ("ussr_cuba_defense_commitment", "Depth of the defense guarantee to Cuba", ["advisory", "conventional_guarantee", "full_umbrella"]),
    ("ussr_air_defense_rules", "Engagement rules for air defenses in Cuba", ["hold_fire", "warn_first", "engage_intruders"]),
    ("cuba_mobilization_level", "Cuban armed forces mobilization", ["partial", "full", "total"]),
    ("cuba_soviet_alignment", "Degree of Cuban deference to Soviet decisions", ["dependent", "coordinated", "autonomous"]),
    ("un_mediation_activity", "Intensity of United Nations good offices", ["passive", "active_shuttle", "emergency_session"]),
    ("oas_support_strength", "Regional organization backing for the quarantine", ["divided", "majority", "unanimous"]),
    ("intelligence_overflight_frequency", "Reconnaissance sortie rate over Cuba", ["suspended", "daily", "continuous"]),
    ("intelligence_confidence", "Confidence in readout of site readiness", ["contested", "moderate", "high"]),
    ("hotline_backchannel_latency_hours", "Hours for a private message to cross", [2, 12, 48]),
    ("leadership_fatigue_level", "Cumulative strain on decision makers", ["rested", "strained", "exhausted"]),
    ("domestic_pressure_us", "Domestic political pressure on the administration", ["restrained", "election_charged", "hawkish_consensus"]),
    ("domestic_pressure_ussr", "Presidium alignment behind the premier", ["presidium_unified", "presidium_split", "hardline_ascendant"]),
    ("ocean_weather_state", "Sea and weather conditions in the theater", ["calm", "rough", "storm"]),
    ("naval_incident_risk", "Background risk of accidental contact at sea", ["low", "elevated", "severe"]),
    ("media_global_attention", "Global media focus on the crisis", ["moderate", "intense", "saturating"]),
]

WINNER_RESPONSES = [
    {"name": "war_event_outcome_probabilities", "description": "Distribution over how the confrontation ends", "kind": "probability_vector", "categories": ["peace", "limited_conflict", "conventional_war", "nuclear_war"]},
    {"name": "escalation_index", "description": "How far up the escalation ladder the day moved", "kind": "scalar", "categories": []},
    {"name": "bilateral_tension_next", "description": "Projected superpower tension for the following day", "kind": "scalar", "categories": []},
    {"name": "systemic_tension_index", "description": "Overall systemic conflict intensity for the day", "kind": "scalar", "categories": []},
]

COUNTERFACTUAL_RESPONSES = [
    {"name": "war_outcome_probabilities", "description": "Distribution over peace, limited conflict and full-scale war", "kind": "probability_vector", "categories": ["peace", "limited_conflict", "full_scale_war"]},
    {"name": "event_trajectory", "description": "How sharply the day departed from the historical track", "kind": "scalar", "categories": []},
    {"name": "international_tension", "description": "Overall international tension for the day", "kind": "scalar", "categories": []},
]

SMALL_CANDIDATES: dict[int, dict] = {
    0: {
        "factors": [
            ("blockade_posture", "Opening coercive measure", ["quarantine", "strike_first", "negotiate_only"]),
            ("backchannel_intensity", "Use of private channels", ["dormant", "active", "continuous"]),
            ("military_readiness", "Alert level of conventional and strategic forces", ["normal", "elevated", "maximum"]),
            ("alliance_pressure", "Weight of allied opinion on decisions", ["weak", "strong"]),
            ("intelligence_quality", "Reliability of site readiness estimates", ["contested", "high"]),
            ("domestic_hawkishness", "Domestic appetite for forceful action", ["restrained", "intense"]),
        ],
        "responses": [
            {"name": "war_probability", "description": "Chance the standoff ends in war", "kind": "probability_vector", "categories": ["peace", "war"]},
            {"name": "crisis_duration_days", "description": "Days until resolution", "kind": "scalar", "categories": []},
        ],
    },
    2: {
        "factors": [
            ("quarantine_procedure", "How interception tightens over time", ["gradual", "immediate"]),
            ("inspection_protocol", "Handling of vessels at the line", ["hail_only", "board_all"]),
            ("escalation_ladder_discipline", "Adherence to graduated response", ["strict", "loose"]),
            ("communication_latency", "Delay in leader-to-leader messages", ["hours", "days"]),
            ("command_delegation", "Authority granted to on-scene commanders", ["centralized", "delegated"]),
        ],
        "responses": [
            {"name": "engagement_outcome_distribution", "description": "Distribution over quarantine-line engagement outcomes", "kind": "probability_vector", "categories": []},
            {"name": "procedural_error_count", "description": "Count of protocol breaches per run", "kind": "scalar", "categories": []},
        ],
        "responses_fixed": [
            {"name": "engagement_outcome_distribution", "description": "Distribution over quarantine-line engagement outcomes", "kind": "probability_vector", "categories": ["no_contact", "hail_resolved", "boarding", "shots_fired"]},
            {"name": "procedural_error_count", "description": "Count of protocol breaches per run", "kind": "scalar", "categories": []},
        ],
    },
    3: {
        "factors": [
            ("outcome_horizon_days", "Simulated horizon length", [7, 13, 21]),
            ("settlement_channel", "Channel through which settlement is reached", ["public", "private", "mediated"]),
            ("concession_sequencing", "Order in which concessions are made", ["simultaneous", "soviet_first", "us_first"]),
            ("verification_regime", "Verification attached to the settlement", ["none", "un_observers", "joint"]),
        ],
        "responses": [
            {"name": "final_outcome_category", "description": "Final category of the crisis ending", "kind": "categorical", "categories": ["peace", "limited_conflict", "conventional_war", "nuclear_war"]},
            {"name": "agreement_durability", "description": "Durability of the settlement reached", "kind": "scalar", "categories": []},
        ],
    },
}

CHIEF_SCORE_TABLE: dict[int, list[float]] = {
    0: [70, 60, 65, 55, 65, 100],
    1: [80, 60, 70, 50, 60, 100],
    2: [60, 55, 50, 45, 55, 100],
    3: [65, 50, 60, 50, 50, 100],
}

CHIEF_RATIONALES = [
    "confound isolation and variable operability assessed against the design",
    "execution burden proportionate to an artificial-society sandbox",
    "factor isolation and repeatability of the simulated runs",
    "resilience to missing data and exogenous shocks",
    "fit to the stated research question and setting",
    "no sensitive data use or foreseeable harm identified",
]

# -- cast ---------------------------------------------------------------------

CUBAN_ACTORS = [
    {
        "id": "kennedy",
        "name": "John F. Kennedy",
        "identity": "President of the United States",
        "description": "Commander in chief navigating between hawkish advisers and the risk of nuclear war.",
        "influence_factors": ["us_blockade_posture", "us_airstrike_readiness", "us_invasion_preparation", "us_defcon_level", "us_turkey_missile_stance", "us_backchannel_intensity"],
        "knowledge": [
            "U-2 photography confirms medium-range ballistic missile sites under construction in Cuba.",
            "A surprise air strike cannot guarantee destruction of every missile before launch.",
            "Allied and regional backing strengthens any coercive measure's legitimacy.",
        ],
        "goals": ["remove the missiles from Cuba", "avoid nuclear war", "preserve American credibility"],
    },
    {
        "id": "excomm",
        "name": "ExComm",
        "identity": "Executive Committee of the National Security Council",
        "description": "The President's crisis staff: analysis, options and execution.",
        "influence_factors": ["us_un_strategy", "us_press_management", "us_allied_coordination", "intelligence_overflight_frequency", "intelligence_confidence", "domestic_pressure_us"],
        "knowledge": [
            "Strike, blockade and diplomatic tracks each carry distinct escalation risks.",
            "Reconnaissance readout improves with daily overflights.",
        ],
        "goals": ["give the President executable options", "prevent unintended escalation at sea"],
    },
    {
        "id": "khrushchev",
        "name": "Nikita Khrushchev",
        "identity": "First Secretary and Premier of the Soviet Union",
        "description": "Gambled on deploying missiles to redress the strategic balance and protect Cuba.",
        "influence_factors": ["ussr_deployment_pace", "ussr_ship_orders", "ussr_submarine_posture", "ussr_negotiation_stance", "ussr_public_messaging", "ussr_cuba_defense_commitment", "ussr_air_defense_rules", "domestic_pressure_ussr"],
        "knowledge": [
            "The strategic balance heavily favors the United States in deliverable warheads.",
            "American missiles in Turkey offer a symmetric bargaining counter.",
            "A blockade can be weathered; a shooting war cannot be won.",
        ],
        "goals": ["protect Cuba from invasion", "extract a face-saving settlement", "avoid war with the United States"],
    },
    {
        "id": "castro",
        "name": "Fidel Castro",
        "identity": "Prime Minister of Cuba",
        "description": "Expects invasion and presses his patron not to yield.",
        "influence_factors": ["cuba_mobilization_level", "cuba_soviet_alignment"],
        "knowledge": [
            "An American invasion plan against the island has existed since the failed landing.",
        ],
        "goals": ["deter an American invasion", "keep Soviet protection committed"],
    },
    {
        "id": "un_council",
        "name": "UN Security Council",
        "identity": "United Nations Security Council and Secretariat",
        "description": "Forum for confrontation and quiet broker of restraint.",
        "influence_factors": ["un_mediation_activity", "oas_support_strength", "media_global_attention"],
        "knowledge": [
            "Good offices are most effective when both parties need a ladder to climb down.",
        ],
        "goals": ["prevent superpower war", "provide verification machinery for any settlement"],
    },
    {
        "id": "environment",
        "name": "Environment",
        "identity": "ambient conditions and background processes of the scenario",
        "description": "Weather, sea state and ambient friction in the theater.",
        # ocean_weather_state deliberately left unassigned: the factory's
        # repair path must append it to this actor.
        "influence_factors": ["naval_incident_risk", "hotline_backchannel_latency_hours", "leadership_fatigue_level"],
        "knowledge": [],
        "goals": ["evolve ambient conditions plausibly and impartially"],
    },
]

CUBAN_EDGES = [
    {"a": "kennedy", "b": "khrushchev", "label": "adversaries"},
    {"a": "excomm", "b": "kennedy", "label": "advises and executes for"},
    {"a": "castro", "b": "khrushchev", "label": "client and patron"},
    {"a": "castro", "b": "kennedy", "label": "open hostility"},
    {"a": "kennedy", "b": "un_council", "label": "presents evidence to"},
    {"a": "khrushchev", "b": "un_council", "label": "deflects inquiries at"},
    {"a": "excomm", "b": "un_council", "label": "briefs"},
    {"a": "castro", "b": "excomm", "label": "surveilled by"},
]

SUPERVISOR_EDGE_RELABEL = ("kennedy", "khrushchev", "adversaries exchanging direct correspondence")
SUPERVISOR_CASTRO_KNOWLEDGE = "Soviet withdrawal decisions may be made without consulting Havana."

# -- daily decisions ----------------------------------------------------------

KENNEDY_HISTORICAL = [
    "I convene a secret executive committee of my closest advisers to weigh responses to the missile discovery, and order absolute secrecy while options are prepared.",
    "I direct the committee to develop both an air-strike plan and a naval blockade plan, and order additional reconnaissance flights over Cuba.",
    "I receive the Soviet foreign minister without revealing what we know, restating that offensive weapons in Cuba would bring the gravest consequences, and I maintain a firm stance.",
    "I ask planners to refine the quarantine option as the first step short of war, keeping the strike package ready if the missiles approach readiness.",
    "I approve the executive committee's recommendation of a naval quarantine of Cuba and order preparations to announce it.",
    "I review the proclamation text, brief congressional leaders, and schedule a televised address to the nation.",
    "I deliver a televised address revealing the missile sites and announce a naval blockade of Cuba, demanding withdrawal of the weapons.",
    "I sign the quarantine proclamation, welcome the regional organization's backing, and order the Navy to intercept with minimum force.",
    "With the blockade in effect I order the line held steadily while instructing commanders to give Soviet ships room to turn back.",
    "I direct our ambassador to present the reconnaissance photographs before the United Nations Security Council and keep the quarantine tight.",
    "I study the Soviet premier's private letter proposing withdrawal in exchange for a non-invasion pledge and have it explored quietly.",
    "Despite the loss of a reconnaissance plane I restrain retaliation, accept the first letter's terms publicly, and privately assure that our missiles in Turkey will come out in due course.",
    "I welcome the announced withdrawal, pledge that we will not invade Cuba, and order the quarantine wound down as removal is verified.",
]

KENNEDY_TOUGH = [
    "I convene my advisers and tell them plainly that the missiles will come out, by force if necessary, and I order strike planning to begin at once.",
    "I order the air-strike package expanded to cover every missile site and move the invasion force toward embarkation ports.",
    "I confront the Soviet foreign minister directly with our evidence and warn that we will act within days unless the missiles are withdrawn.",
    "I raise our forces to a higher alert and authorize low-level flights that make our strike readiness unmistakable.",
    "I reject a quarantine-only course as too soft and approve a blockade backed by an explicit deadline for withdrawal.",
    "I brief congressional leaders that the blockade will be enforced without exception and that a strike follows if work on the sites continues.",
    "In my televised address I issue a 24-hour ultimatum: dismantle the sites or the United States will destroy them.",
    "I order the Navy to stop every Soviet vessel at the line, boarding by force where they refuse, with warning shots authorized.",
    "When a Soviet freighter refuses inspection I authorize warning shots and a forced boarding; our destroyers exchange fire with its escort before both sides break contact.",
    "I keep the strike package on alert and demand immediate withdrawal, accepting third-party talks only on that basis.",
    "I acknowledge the premier's letter but publicly insist the deadline stands; privately I allow a narrow channel to arrange verification.",
    "I suspend further boardings while verification is negotiated but keep forces at peak readiness and refuse any public trade.",
    "With withdrawal under way I declare the operation successful, maintaining the blockade until every site is confirmed dismantled.",
]

KHRUSHCHEV_HISTORICAL = [
    "I order deployment crews to press on discreetly and instruct our diplomats to deny that any offensive weapons are in Cuba.",
    "I weigh the risk of discovery and direct that construction continue under tighter concealment while we gauge American intentions.",
    "I have our foreign minister assure Washington that our assistance to Cuba is purely defensive.",
    "I authorize heightened air-defense readiness around the island while avoiding provocations at sea; the weapons must deter, not ignite.",
    "Sensing American preparations, I consult the Presidium on how to answer a possible blockade without surrendering the initiative.",
    "I instruct ship captains to proceed for now and prepare political counter-moves against an announced blockade.",
    "I denounce the announced blockade as piracy on the high seas and declare that our captains have orders to defend themselves.",
    "I order the most sensitive cargoes to slow and hold position short of the quarantine line while we test American resolve elsewhere.",
    "I order our ships at the line to stop or turn back rather than force a confrontation, and begin seeking a way to end the crisis with honor.",
    "I instruct our United Nations delegation to stall the public debate while I prepare a private proposal to the American president.",
    "I send a private letter proposing to withdraw the missiles in exchange for a pledge not to invade Cuba.",
    "I send a second message adding the American missiles in Turkey to the bargain, while restraining our commanders after the reconnaissance plane was downed.",
    "I broadcast our agreement to dismantle and withdraw the missiles under United Nations verification in return for the non-invasion pledge.",
]

# Used from day 6 onward when the channel shows the hawkish ultimatum.
KHRUSHCHEV_UNDER_ULTIMATUM = {
    6: "Faced with an ultimatum, I declare we will never yield to threats and order our captains to hold course under naval escort.",
    7: "I order escorts to resist boarding attempts and authorize commanders to return fire if fired upon.",
    8: "After the exchange of fire at the line I place our forces on high alert yet quietly signal readiness for third-party mediation before this becomes a war.",
    9: "I accept mediated talks on verification while insisting the shooting at sea must stop on both sides.",
    10: "I offer to halt further weapons shipments during talks if boardings are suspended, keeping our deterrent in place.",
    11: "I agree to phased withdrawal under neutral verification, sparing both sides a wider war.",
    12: "I announce the missiles will be withdrawn under verification, declaring that we averted catastrophe without abandoning Cuba.",
}

EXCOMM_DAYS = [
    "We assemble in secret session, review the U-2 photographs, and commission immediate analyses of strike, blockade and diplomatic options.",
    "We present the President a first comparison of air strike versus naval blockade, flagging that strikes cannot guarantee destroying every site.",
    "We tighten the circle of secrecy and prepare contingency drafts for both tracks while monitoring Soviet diplomatic signals.",
    "We war-game the quarantine's legal basis and draft proclamation language suitable for regional endorsement.",
    "We formally recommend a naval quarantine of Cuba as the opening measure, and the President approves the recommendation.",
    "We finalize address logistics, alert plans and ally notifications for the announcement.",
    "We coordinate global force alerts and brief allied capitals as the address is delivered.",
    "We secure the regional organization's endorsement of the quarantine and refine interception rules of engagement.",
    "We track every contact at the quarantine line and manage signals so that no captain stumbles into escalation.",
    "We assemble the photographic briefing for the Security Council session and assess missile-site readiness daily.",
    "We analyze the premier's private letter overnight and draft response options accepting its core bargain.",
    "We advise answering the first letter while setting aside the second's public terms, and quietly scope the Turkey assurance.",
    "We stand up the verification task force and begin drawing down alert postures on the President's order.",
]

CASTRO_DAYS = [
    "I order anti-aircraft batteries manned around the construction zones and demand Moscow confirm its commitment to our defense.",
    "I accelerate militia mobilization and place coastal defenses on alert against a possible invasion.",
    "I publicly denounce American overflights as violations of our sovereignty.",
    "I request authority for our gunners to engage intruding aircraft and expand shelter preparations in the cities.",
    "I review invasion-defense plans with Soviet advisers and ready the reserves.",
    "I address the nation, declaring we will resist any aggression to the last fighter.",
    "I declare full combat alarm across the island in response to the blockade announcement.",
    "I press Moscow not to retreat at sea and keep our forces at maximum readiness.",
    "I warn that any raid will be met with every weapon we have, while our batteries track the overflights.",
    "I denounce the blockade before the world and rally the population for a long standoff.",
    "I signal displeasure at talk of withdrawal conducted over our heads and insist any deal include guarantees for Cuba.",
    "I demand the non-invasion pledge be explicit and verifiable before any missile leaves the island.",
    "I accept the settlement reluctantly, restating that Cuba's defense remains non-negotiable.",
]

UN_DAYS = [
    "The Council conducts routine consultations; no member formally raises the Caribbean buildup.",
    "Corridor conversations note unusual American reconnaissance activity; no action is taken.",
    "The Secretariat monitors rising superpower friction and prepares good-offices options.",
    "Informal soundings begin on whether the Council should take up the Caribbean question.",
    "Member delegations receive quiet indications that Washington may seek regional endorsement for measures against Cuba.",
    "The Secretariat drafts appeals for restraint in case the confrontation becomes public.",
    "An emergency session is requested after the American address; the Council schedules urgent debate on the quarantine.",
    "The Council convenes in emergency session; the Secretary-General appeals to both parties for a pause at sea.",
    "The Council presses both delegations to avoid incidents at the quarantine line while consultations continue.",
    "In open session the American delegation presents reconnaissance photographs; the Soviet delegation declines to answer directly.",
    "The Secretary-General offers to broker verification arrangements tied to any withdrawal formula.",
    "The Council channels urgent appeals for restraint after the reconnaissance plane is downed, keeping both sides talking.",
    "The Council welcomes the announced settlement and takes up the verification mission's mandate.",
]

ENVIRONMENT_DAYS = [
    "Sea state in the approaches to Cuba is calm; visibility for reconnaissance is excellent.",
    "Weather remains favorable; shipping lanes show dense eastbound Soviet-chartered traffic.",
    "Light squalls cross the Florida Strait without disrupting flights.",
    "A weather front reduces afternoon visibility; night photography is degraded.",
    "Seas moderate; the front clears by evening.",
    "Calm seas and clear skies across the quarantine arc.",
    "Stable high pressure; excellent conditions for naval operations and overflights.",
    "Choppy seas near the line; small-craft advisories posted.",
    "Rough patches subside by midday; tracking conditions good.",
    "Clear and calm; moonlit nights aid surface surveillance.",
    "Mild swell; no weather constraints on operations.",
    "Scattered storms north of Cuba complicate low-level flights.",
    "Clear across the theater; seas calm.",
]

ACTOR_TABLES = {
    "kennedy": KENNEDY_HISTORICAL,
    "khrushchev": KHRUSHCHEV_HISTORICAL,
    "excomm": EXCOMM_DAYS,
    "castro": CASTRO_DAYS,
    "un_council": UN_DAYS,
    "environment": ENVIRONMENT_DAYS,
}

# -- judge trajectories --------------------------------------------------------

# Raw integer weights per day (normalized by the runtime). The dips in the
# peace column on days 3, 7 and 8 correspond to the bundled injected events.
WAR4_WEIGHTS = [
    [40, 30, 20, 10],
    [42, 30, 19, 9],
    [45, 29, 18, 8],
    [38, 32, 21, 9],
    [46, 30, 17, 7],
    [50, 28, 16, 6],
    [52, 28, 14, 6],
    [44, 32, 17, 7],
    [47, 31, 16, 6],
    [62, 22, 11, 5],
    [70, 18, 8, 4],
    [74, 16, 7, 3],
    [85, 10, 4, 1],
]

WAR3_WEIGHTS = [
    [45, 35, 20],
    [44, 36, 20],
    [42, 37, 21],
    [36, 41, 23],
    [40, 38, 22],
    [38, 39, 23],
    [30, 45, 25],
    [22, 55, 23],
    [18, 60, 22],
    [24, 56, 20],
    [28, 54, 18],
    [30, 53, 17],
    [34, 52, 14],
]

SCALAR_TABLES = {
    "escalation_index": [35, 38, 40, 48, 44, 46, 55, 62, 58, 45, 38, 50, 15],
    "bilateral_tension_next": [50, 52, 54, 60, 57, 58, 66, 72, 70, 55, 48, 58, 25],
    "systemic_tension_index": [45, 48, 50, 57, 54, 56, 64, 72, 69, 52, 46, 60, 22],
    "event_trajectory": [40, 43, 46, 55, 52, 55, 68, 80, 85, 75, 68, 62, 55],
    "international_tension": [48, 50, 53, 60, 57, 60, 70, 82, 86, 76, 68, 62, 55],
}

PEACE_OUTCOME = {
    "label": "Peaceful resolution, but tense relations: the missiles are withdrawn under mutual assurances while deep distrust persists.",
    "category": "peace",
}

LIMITED_CONFLICT_OUTCOME = {
    "label": "Limited conflict: local military confrontations occurred at the quarantine line, but the crisis ended without escalation to full-scale war.",
    "category": "limited_conflict",
}

CONFLICT_MARKER = "exchange fire"


def _first_json_after(text: str, anchor: str):
    pos = text.find(anchor)
    if pos < 0:
        return None
    start = text.find("{", pos)
    if start < 0:
        return None
    try:
        return json.JSONDecoder().raw_decode(text, start)[0]
    except json.JSONDecodeError:
        return None


def _stable_int(text: str, modulus: int) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "big") % modulus


class DemoTransport:
    """Callable transport answering every role deterministically."""

    def __call__(self, req: CompletionRequest) -> str:
        text = "\n\n".join(m.text for m in req.messages)
        role = req.role_id
        if role == "screenwriter":
            return self._screenwriter(text)
        if role.startswith("director_"):
            return self._director(text)
        if role == "chief_director":
            return self._chief(text)
        if role == "supervisor":
            return self._supervisor(text)
        if role.startswith("actor:"):
            return self._actor(role.split(":", 1)[1], text)
        if role == "judge":
            return self._judge(text)
        if role == "embedder":
            return self._embed(req.messages[-1].text)
        raise ValueError(f"demo transport has no script for role {role!r}")

    # -- composition roles ------------------------------------------------

    def _perspective_index(self, text: str) -> int:
        match = re.search(r"Candidate perspective: (.+)", text)
        perspective = match.group(1).strip() if match else ""
        return PERSPECTIVE_INDEX.get(perspective, 0)

    def _is_cuban(self, text: str) -> bool:
        return CUBAN_TAG in text

    def _factors_payload(self, index: int, cuban: bool, fixed: bool) -> dict:
        if cuban and index == 1:
            return {
                "factors": [
                    {"name": n, "description": d, "levels": lv, "unit": None}
                    for n, d, lv in WINNER_FACTORS
                ],
                "responses": WINNER_RESPONSES,
            }
        spec = SMALL_CANDIDATES.get(index if cuban else -1)
        if spec is None:
            return {
                "factors": [
                    {"name": f"factor_{i}", "description": "generic factor", "levels": ["low", "high"], "unit": None}
                    for i in range(1, 4)
                ],
                "responses": [
                    {"name": "outcome_index", "description": "generic outcome", "kind": "scalar", "categories": []},
                    {"name": "outcome_distribution", "description": "generic distribution", "kind": "probability_vector", "categories": ["low", "medium", "high"]},
                ],
            }
        responses = spec["responses_fixed"] if fixed and "responses_fixed" in spec else spec["responses"]
        return {
            "factors": [{"name": n, "description": d, "levels": lv, "unit": None} for n, d, lv in spec["factors"]],
            "responses": responses,
        }

    def _design_points(self, index: int, cuban: bool) -> dict:
        if cuban and index == 1:
            base = {n: lv[0] for n, _, lv in WINNER_FACTORS}
            points = [{"id": "dp-001", "assignments": dict(base)}]
            for k, (name, _, levels) in enumerate(WINNER_FACTORS[:11], start=2):
                variant = dict(base)
                variant[name] = levels[1]
                points.append({"id": f"dp-{k:03d}", "assignments": variant})
            return {"design_points": points}
        payload = self._factors_payload(index, cuban, fixed=True)
        factors = [(f["name"], f["levels"]) for f in payload["factors"]]
        base = {n: lv[0] for n, lv in factors}
        points = [{"id": "dp-001", "assignments": dict(base)}]
        for k, (name, levels) in enumerate(factors[:3], start=2):
            variant = dict(base)
            variant[name] = levels[1]
            points.append({"id": f"dp-{k:03d}", "assignments": variant})
        return {"design_points": points}

    def _screenwriter(self, text: str) -> str:
        cuban = self._is_cuban(text)
        index = self._perspective_index(text)
        if "The format reviewer rejected" in text:
            doc = _first_json_after(text, "Assembled script document:")
            return json.dumps(doc if doc is not None else {})
        rewrite = "The reviewer rejected the" in text
        if "Draft the experiment objective" in text:
            if cuban:
                return json.dumps({"statement": GOALS[index], "success_criteria": SUCCESS_CRITERIA[index]})
            return json.dumps({"statement": "Measure how the core variables shape the target outcome.", "success_criteria": []})
        if "Draft the influence factors" in text or "influence_and_response_factors section" in text:
            return json.dumps(self._factors_payload(index, cuban, fixed=rewrite))
        if "Draft the experimental design points" in text or "design_points section" in text:
            return json.dumps(self._design_points(index, cuban))
        if rewrite and "goal section" in text:
            if cuban:
                return json.dumps({"statement": GOALS[index], "success_criteria": SUCCESS_CRITERIA[index]})
            return json.dumps({"statement": "Measure how the core variables shape the target outcome.", "success_criteria": []})
        return json.dumps({"statement": "Measure how the core variables shape the target outcome.", "success_criteria": []})

    _BARE_PROBABILITY = re.compile(r'"categories":\s*\[\],\s*"description":"[^"]*","kind":"probability_vector"')

    def _director(self, text: str) -> str:
        # a probability_vector response without categories is the one
        # scripted rejection in the bundled scenario
        if self._BARE_PROBABILITY.search(text):
            return json.dumps(
                {
                    "passed": False,
                    "feedback": "the probability_vector response declares no categories; enumerate the outcome categories explicitly",
                }
            )
        return json.dumps({"passed": True, "feedback": ""})

    def _chief(self, text: str) -> str:
        doc = _first_json_after(text, "Candidate under evaluation:")
        index = 0
        if doc is not None:
            index = int(doc.get("provenance", {}).get("candidate_index", 0))
        values = CHIEF_SCORE_TABLE.get(index, [70, 60, 60, 50, 60, 100])
        criteria = [
            "scientific_soundness",
            "implementation_difficulty",
            "conditions_controllability",
            "risk_robustness",
            "requirement_alignment",
            "ethics_compliance",
        ]
        return json.dumps(
            {
                "scores": dict(zip(criteria, values)),
                "rationales": dict(zip(criteria, CHIEF_RATIONALES)),
                "total": 0,  # deliberately wrong: the system must ignore provider totals
            }
        )

    def _supervisor(self, text: str) -> str:
        if "Current cast:" in text:
            doc = _first_json_after(text, "Current cast:")
            if doc is None:
                return json.dumps({"actors": [], "edges": []})
            a, b, label = SUPERVISOR_EDGE_RELABEL
            for edge in doc.get("edges", []):
                if {edge.get("a"), edge.get("b")} == {a, b}:
                    edge["label"] = label
            for actor in doc.get("actors", []):
                if actor.get("id") == "castro" and SUPERVISOR_CASTRO_KNOWLEDGE not in actor.get("knowledge", []):
                    actor.setdefault("knowledge", []).append(SUPERVISOR_CASTRO_KNOWLEDGE)
            return json.dumps(doc)
        # cast generation
        if self._is_cuban(text):
            return json.dumps({"actors": CUBAN_ACTORS, "edges": CUBAN_EDGES})
        script = _first_json_after(text, "Finalized script:") or {}
        factor_names = [f.get("name", "") for f in script.get("factors", [])]
        principal = {
            "id": "principal",
            "name": "Principal",
            "identity": "the scenario's central decision maker",
            "description": "Generic protagonist for unscripted scenarios.",
            "influence_factors": factor_names[: max(1, len(factor_names) // 2)],
            "knowledge": ["knows the scenario background"],
            "goals": ["pursue the experiment objective"],
        }
        counterpart = {
            "id": "counterpart",
            "name": "Counterpart",
            "identity": "the principal's opposite number",
            "description": "Generic deuteragonist for unscripted scenarios.",
            "influence_factors": factor_names[max(1, len(factor_names) // 2) :],
            "knowledge": [],
            "goals": ["advance its own interests"],
        }
        return json.dumps(
            {
                "actors": [principal, counterpart],
                "edges": [{"a": "counterpart", "b": "principal", "label": "negotiates with"}],
            }
        )

    # -- performance roles --------------------------------------------------

    def _day_index(self, text: str) -> int:
        match = re.search(r"Day index: (\d+)", text)
        return int(match.group(1)) if match else 0

    def _actor(self, agent_id: str, text: str) -> str:
        day = self._day_index(text)
        tough = "Standing directive" in text and "tough" in text.lower()
        if agent_id == "kennedy" and tough:
            table = KENNEDY_TOUGH
        elif agent_id == "khrushchev" and "ultimatum" in text and day in KHRUSHCHEV_UNDER_ULTIMATUM:
            return KHRUSHCHEV_UNDER_ULTIMATUM[day]
        else:
            table = ACTOR_TABLES.get(agent_id)
        if table is None:
            return f"On day {day} I take measured actions consistent with my goals and current circumstances."
        return table[day % len(table)]

    def _judge(self, text: str) -> str:
        day = self._day_index(text)
        factor = None
        match = re.search(r"Response variable: (\S+)", text)
        if match:
            factor = match.group(1)

        if "Rate how closely the simulated decisions" in text or "rating semantic similarity" in text:
            score = 55 + _stable_int(text, 3600) / 100.0
            return json.dumps({"score": round(score, 2), "rationale": "deterministic demo rating"})

        if "final verdict of a completed simulation" in text:
            if CONFLICT_MARKER in text:
                return json.dumps(LIMITED_CONFLICT_OUTCOME)
            return json.dumps(PEACE_OUTCOME)

        if factor == "war_event_outcome_probabilities":
            return json.dumps({"weights": WAR4_WEIGHTS[day % len(WAR4_WEIGHTS)]})
        if factor == "war_outcome_probabilities":
            return json.dumps({"weights": WAR3_WEIGHTS[day % len(WAR3_WEIGHTS)]})
        if factor in SCALAR_TABLES:
            return json.dumps({"score": SCALAR_TABLES[factor][day % 13]})

        if "Categories, in order:" in text:
            match = re.search(r"Categories, in order: (.+)", text)
            n = len(match.group(1).split(",")) if match else 2
            weights = [3] + [1] * (n - 1)
            return json.dumps({"weights": weights})

        # generic scalar (including the dedicated tension judge)
        return json.dumps({"score": min(100, 40 + 2 * day + _stable_int(text, 7))})

    def _embed(self, text: str) -> str:
        raw = hashlib.sha256(text.encode("utf-8")).digest()
        vector = [round(b / 255.0 + 0.05, 6) for b in raw[:8]]
        return json.dumps(vector)
