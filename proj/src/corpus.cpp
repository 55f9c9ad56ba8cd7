// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace kvc {

namespace {

using json = nlohmann::json;

// Attribute pools. Every value is a single token under the whitespace tokenizer.
const std::vector<std::string> kNames = {
    "Marta_Kovacs",    "Liam_Okafor",     "Sofia_Lindqvist", "Hiro_Tanaka",     "Amara_Nwosu",
    "Diego_Ferreira",  "Elena_Petrova",   "Tomas_Novak",     "Priya_Raman",     "Jonas_Becker",
    "Ingrid_Dahl",     "Kwame_Mensah",    "Lucia_Romano",    "Omar_Haddad",     "Greta_Holm",
    "Ravi_Iyer",       "Chloe_Marchand",  "Mateo_Silva",     "Yuki_Sato",       "Nadia_Benali",
    "Felix_Brandt",    "Aisha_Karimi",    "Pavel_Sokolov",   "Leah_Goldberg",   "Tariq_Aziz",
    "Maren_Solberg",   "Bruno_Costa",     "Ines_Duarte",     "Viktor_Horvat",   "Zara_Qureshi",
    "Oskar_Nilsson",   "Mei_Chen",        "Rafael_Ortiz",    "Hanna_Virtanen",  "Samuel_Adeyemi",
    "Clara_Weiss",     "Emil_Jansen",     "Leila_Farahani",  "Anton_Kral",      "Beatriz_Lopes",
    "Dmitri_Volkov",   "Freya_Lund",      "Gideon_Mbeki",    "Isla_Fraser",     "Jakob_Huber",
    "Keiko_Mori",      "Lorenzo_Gallo",   "Mira_Stojanovic", "Nikolai_Berg",    "Olga_Ivanova",
    "Pablo_Reyes",     "Rosa_Jimenez",    "Stefan_Wolf",     "Talia_Cohen",     "Umar_Siddiqui",
    "Vera_Kuznetsova", "Wanjiru_Kamau",   "Xavier_Dubois",   "Yara_Haddad",     "Zoltan_Szabo",
    "Agnes_Toth",      "Boris_Markovic",  "Celine_Laurent",  "Dario_Conti",
};

const std::vector<std::string> kTitles = {
    "Aurora",  "Borealis", "Cascade", "Dynamo",   "Ember",   "Falcon",   "Glacier",  "Harbor",
    "Ionis",   "Juniper",  "Kestrel", "Lumen",    "Monsoon", "Nebula",   "Obsidian", "Pinnacle",
    "Quartz",  "Rapids",   "Sequoia", "Tundra",   "Umbra",   "Vortex",   "Willow",   "Xenon",
    "Yarrow",  "Zephyr",   "Atlas",   "Beacon",   "Cobalt",  "Deltaic",  "Echelon",  "Fjord",
    "Granite", "Helix",    "Iridium", "Jasper",   "Krypton", "Lotus",    "Meridian", "Nimbus",
};

const std::vector<std::string> kDomains = {
    "robotics",     "genomics",      "agriculture",     "logistics",      "cybersecurity", "energy",
    "finance",      "healthcare",    "education",       "climatology",    "aerospace",     "biotech",
    "materials",    "transport",     "retail",          "media",          "mining",        "oceanography",
    "pharmacology", "semiconductors", "telecom",        "tourism",        "insurance",     "construction",
    "forestry",     "fisheries",     "manufacturing",   "nutrition",      "linguistics",   "astronomy",
    "seismology",   "hydrology",     "cartography",     "archaeology",    "acoustics",     "optics",
    "metallurgy",   "textiles",      "ceramics",        "horticulture",
};

const std::vector<std::string> kSponsors = {
    "Novatek",        "Heliogen_Fund",   "Vantara_Group",  "Quorvia",        "Sitrex_Labs",
    "Maxwell_Trust",  "Orion_Capital",   "Bluefield_Inc",  "Cedarline",      "Arcturus_Labs",
    "Pemberton_Fund", "Lakeshore_Bank",  "Redwood_Trust",  "Stellaris",      "Ironbridge",
    "Northwind_Co",   "Silverpine",      "Corvid_Systems", "Tidewater_Fund", "Ashford_Group",
    "Brightmoor",     "Keystone_Labs",   "Goldcrest",      "Harrowgate",     "Evergreen_Fund",
    "Falkland_Co",    "Marlowe_Trust",   "Ridgeway_Inc",   "Solace_Capital", "Thornbury",
    "Upland_Labs",    "Westbrook_Fund",  "Zenith_Group",   "Amberly",        "Blackstone_Labs",
    "Crestview",      "Driftwood_Co",    "Eastgate_Trust", "Foxglove_Fund",  "Greywater",
};

const std::vector<std::string> kOccupations = {
    "mechanic", "teacher",    "nurse",      "architect",  "chemist",   "journalist", "pharmacist",
    "carpenter",      "economist",  "librarian",  "geologist",  "translator", "surveyor",  "baker",
    "electrician",    "veterinarian", "statistician", "photographer", "paramedic", "dentist",
};

const std::vector<std::string> kCities = {
    "Lisbon", "Oslo",   "Nairobi", "Kyoto",    "Porto",    "Krakow",  "Lyon",     "Bergen",
    "Tartu",  "Quito",  "Hobart",  "Dakar",    "Tromso",   "Graz",    "Valencia", "Cork",
    "Leiden", "Turku",  "Malmo",   "Bologna",  "Ghent",    "Brno",    "Pune",     "Cusco",
};

const std::vector<std::string> kHobbies = {
    "chess",    "climbing", "pottery",   "sailing",  "gardening", "cycling",   "origami",  "birdwatching",
    "fencing",  "knitting", "rowing",    "painting", "archery",   "hiking",    "baking",   "calligraphy",
    "kayaking", "juggling", "stargazing", "woodworking", "fishing", "running", "skating", "drumming",
};

const std::vector<std::string> kRoles = {
    "Engineer", "Manager", "Analyst", "Designer", "Researcher", "Coordinator", "Director", "Consultant",
};

const std::vector<std::string> kDepartments = {
    "R&D", "Marketing", "Sales", "Accounting", "Operations", "Legal", "Support", "Procurement",
};

const std::vector<std::string> kSummaryWords = {
    "prototypes", "field",     "trials",  "data",     "pipelines", "models",   "sensors",   "workshops",
    "reports",    "surveys",   "tooling", "audits",   "pilots",    "partners", "standards", "benchmarks",
};

const std::vector<std::string> kFiller = {
    "the",      "weather",   "was",      "calm",      "and",       "quiet",    "afternoon", "notes",
    "mention",  "routine",   "updates",  "general",   "items",     "were",     "reviewed",  "later",
    "office",   "hallway",   "coffee",   "schedule",  "remained",  "unchanged", "several",  "documents",
    "archived", "as",        "usual",    "nothing",   "notable",   "occurred", "during",    "week",
    "minor",    "maintenance", "planned", "building", "lights",    "printer",  "paper",     "supply",
    "delivered", "morning",  "desk",     "chairs",    "window",    "garden",   "parking",   "lot",
    "visitors", "signed",    "reception", "calendar", "reminder",  "newsletter", "draft",   "circulated",
    "lunch",    "friday",    "corridor", "plants",    "watered",   "boxes",
};

// Words used by chunk, question, prompt and guidance templates.
const std::vector<std::string> kTemplateWords = {
    "person", "profile", "project", "membership", "record", "is", "years", "old", "works", "lives", "in",
    "hobbies", "of", "are", "a", "sponsored", "by", "started", "summary", "team", "behind", "focuses", "on",
    "part", "department", "belongs", "to", "with", "role", "which", "projects", "does", "belong", "have",
    "what", "'s", "domains", "did", "begin", "who", "sponsors", "task", "answer", "factual", "questions",
    "about", "this", "corpus", "question", "context", ":", ",", ".", "?",
};

constexpr std::size_t kFirstAge = 23;
constexpr std::size_t kLastAge = 64;
constexpr std::size_t kFirstYear = 1981;
constexpr std::size_t kLastYear = 2024;

std::string lower(const std::string& s) { return to_lower(s); }

std::string person_name(std::size_t index) {
    std::string n = std::to_string(index + 1);
    return "Person_" + std::string(n.size() < 2 ? "0" : "") + n;
}

std::vector<std::string> pick(Rng& rng, const std::vector<std::string>& pool, std::size_t count) {
    std::vector<std::string> out;
    for (auto i : rng.sample(pool.size(), count)) out.push_back(pool[i]);
    return out;
}

std::string join_words(const std::vector<std::string>& words, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) out += (i ? sep : "") + words[i];
    return out;
}

// "a , b and c" style list used in chunk text.
std::string spoken_list(const std::vector<std::string>& items) {
    if (items.size() == 1) return items[0];
    std::string out;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) out += (i ? " , " : "") + items[i];
    return out + " and " + items.back();
}

struct Draft {
    ChunkKind kind;
    std::string body;
    std::vector<std::string> refs;
    std::size_t owner = 0;  // person/project index for entity chunks
};

std::string pad_to_chunk(const std::string& body, Rng& rng, const Vocabulary& vocab) {
    const std::size_t used = tokenize(body, vocab).size();
    KVC_CHECK(used <= kChunkTokens, ErrorCode::Internal, "chunk body exceeds 256 tokens");
    std::string text = body;
    for (std::size_t i = used; i < kChunkTokens; ++i) {
        if (!text.empty()) text += ' ';
        text += kFiller[rng.below(kFiller.size())];
    }
    return text;
}

std::string question_prefix(const CorpusSpec& spec) {
    return "c" + std::to_string(spec.connectivity) + "-s" + std::to_string(spec.seed) +
           (spec.variant == NameVariant::Similar ? "-sim" : "");
}

std::string chunk_kind_name(ChunkKind k) { return to_string(k); }

ChunkKind chunk_kind_from(const std::string& s) {
    for (auto k : {ChunkKind::Person, ChunkKind::Project, ChunkKind::Membership, ChunkKind::Filler}) {
        if (s == to_string(k)) return k;
    }
    throw Error(ErrorCode::Malformed, "unknown chunk kind: " + s);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    KVC_CHECK(in.good(), ErrorCode::MissingArtifact, "bundle file not found: " + path.string());
    std::vector<json> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Malformed, path.string() + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace

void CorpusSpec::validate() const {
    KVC_CHECK(connectivity >= 1 && connectivity <= 8, ErrorCode::InvalidArgument,
              "connectivity must be in [1, 8], got " + std::to_string(connectivity));
    KVC_CHECK(questions_per_kind >= 1, ErrorCode::InvalidArgument, "questions_per_kind must be at least 1");
}

const char* to_string(ChunkKind kind) {
    switch (kind) {
        case ChunkKind::Person: return "person";
        case ChunkKind::Project: return "project";
        case ChunkKind::Membership: return "membership";
        case ChunkKind::Filler: return "filler";
    }
    return "?";
}

const char* to_string(QuestionKind kind) { return kind == QuestionKind::Direct ? "direct" : "join"; }

const char* to_string(NameVariant variant) { return variant == NameVariant::Distinct ? "distinct" : "similar"; }

Vocabulary corpus_vocabulary() {
    std::set<std::string> words;
    auto add_all = [&](const std::vector<std::string>& pool) {
        for (const auto& w : pool) words.insert(lower(w));
    };
    for (const auto* pool : {&kNames, &kTitles, &kDomains, &kSponsors, &kOccupations, &kCities, &kHobbies, &kRoles,
                             &kDepartments, &kSummaryWords, &kFiller, &kTemplateWords}) {
        add_all(*pool);
    }
    for (std::size_t i = 0; i < kPeople; ++i) words.insert(lower(person_name(i)));
    for (std::size_t a = kFirstAge; a <= kLastAge; ++a) words.insert(std::to_string(a));
    for (std::size_t y = kFirstYear; y <= kLastYear; ++y) words.insert(std::to_string(y));
    return Vocabulary::from_words({words.begin(), words.end()});
}

TokenSequence CorpusBundle::corpus_tokens() const {
    TokenSequence seq;
    seq.ids.reserve(chunks.size() * kChunkTokens);
    for (const auto& c : chunks) seq.ids.insert(seq.ids.end(), c.tokens.begin(), c.tokens.end());
    return seq;
}

Digest CorpusBundle::fingerprint() const {
    Hasher h;
    h.update("kvc-tokens");
    for (const auto& c : chunks)
        for (TokenId id : c.tokens) h.update_pod(id);
    return h.finish();
}

const Question& CorpusBundle::question(const std::string& id) const {
    for (const auto& q : questions)
        if (q.id == id) return q;
    throw Error(ErrorCode::InvalidArgument, "unknown question id: " + id);
}

CorpusBundle generate_corpus(const CorpusSpec& spec) {
    spec.validate();
    CorpusBundle b;
    b.spec = spec;
    b.vocab = corpus_vocabulary();
    Rng rng(spec.seed * 0x9E3779B97F4A7C15ull + spec.connectivity);

    std::vector<std::string> ages;
    for (std::size_t a = kFirstAge; a <= kLastAge; ++a) ages.push_back(std::to_string(a));
    std::vector<std::string> years;
    for (std::size_t y = kFirstYear; y <= kLastYear; ++y) years.push_back(std::to_string(y));

    const auto names = pick(rng, kNames, kPeople);
    for (std::size_t i = 0; i < kPeople; ++i) {
        PersonRecord p;
        p.name = spec.variant == NameVariant::Similar ? person_name(i) : names[i];
        p.age = ages[rng.below(ages.size())];
        p.occupation = kOccupations[rng.below(kOccupations.size())];
        p.city = kCities[rng.below(kCities.size())];
        p.hobbies = pick(rng, kHobbies, 3);
        b.people.push_back(std::move(p));
    }

    const auto titles = pick(rng, kTitles, kProjects);
    const auto domains = pick(rng, kDomains, kProjects);
    const auto sponsors = pick(rng, kSponsors, kProjects);
    const auto starts = pick(rng, years, kProjects);
    for (std::size_t j = 0; j < kProjects; ++j) {
        ProjectRecord p{titles[j], domains[j], sponsors[j], starts[j], ""};
        p.summary = "the team behind " + p.title + " focuses on " + join_words(pick(rng, kSummaryWords, 3), " , ") + " .";
        b.projects.push_back(std::move(p));
    }

    for (std::size_t i = 0; i < kPeople; ++i) {
        MembershipRecord m;
        m.person = i;
        const std::string dept = kDepartments[rng.below(kDepartments.size())];
        for (auto j : rng.sample(kProjects, spec.connectivity)) {
            m.links.push_back({j, kRoles[rng.below(kRoles.size())], dept});
        }
        b.memberships.push_back(std::move(m));
    }

    std::vector<Draft> drafts;
    for (std::size_t i = 0; i < kPeople; ++i) {
        const auto& p = b.people[i];
        std::string body = "person profile : " + p.name + " is " + p.age + " years old . " + p.name + " works as " +
                           p.occupation + " and lives in " + p.city + " . the hobbies of " + p.name + " are " +
                           spoken_list(p.hobbies) + " .";
        drafts.push_back({ChunkKind::Person, body, {"person:" + p.name}, i});
    }
    for (std::size_t j = 0; j < kProjects; ++j) {
        const auto& p = b.projects[j];
        std::string body = "project profile : " + p.title + " is a " + p.domain + " project . " + p.title +
                           " is sponsored by " + p.sponsor + " . " + p.title + " started in " + p.year_started +
                           " . summary : " + p.summary;
        drafts.push_back({ChunkKind::Project, body, {"project:" + p.title}, j});
    }
    for (const auto& m : b.memberships) {
        const auto& p = b.people[m.person];
        std::string body = "membership record : " + p.name + " is part of the " + m.links.front().department +
                           " department .";
        std::vector<std::string> refs = {"person:" + p.name};
        for (const auto& link : m.links) {
            const auto& title = b.projects[link.project].title;
            body += " " + p.name + " belongs to " + title + " with role " + link.role + " .";
            refs.push_back("project:" + title);
        }
        drafts.push_back({ChunkKind::Membership, body, refs, m.person});
    }
    for (std::size_t f = 0; f < kFillerChunks; ++f) drafts.push_back({ChunkKind::Filler, "", {}, f});

    rng.shuffle(drafts);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        ChunkDoc c;
        c.id = i;
        c.kind = drafts[i].kind;
        c.text = pad_to_chunk(drafts[i].body, rng, b.vocab);
        c.tokens = tokenize(c.text, b.vocab).ids;
        c.refs = drafts[i].refs;
        KVC_CHECK(c.tokens.size() == kChunkTokens, ErrorCode::Internal, "chunk is not 256 tokens");
        b.chunks.push_back(std::move(c));
    }
    return b;
}

std::vector<Question> generate_questions(const CorpusBundle& b, std::size_t per_kind, std::uint64_t seed) {
    const std::size_t c = b.spec.connectivity;
    const std::size_t direct_total = kPeople * (2 + c);
    const std::size_t join_total = kPeople * 3;
    KVC_CHECK(per_kind <= std::min(direct_total, join_total), ErrorCode::InvalidArgument,
              "per_kind " + std::to_string(per_kind) + " exceeds the distinct instantiations");

    auto chunk_of = [&](ChunkKind kind, const std::string& ref) {
        for (const auto& ch : b.chunks) {
            if (ch.kind == kind && !ch.refs.empty() && ch.refs.front() == ref) return ch.id;
        }
        throw Error(ErrorCode::Internal, "no chunk for " + ref);
    };

    // Candidate instantiations per template: (person, link index or none)
    struct Slot {
        std::size_t person;
        std::size_t link;
    };
    std::vector<std::vector<Slot>> pools(6);
    for (std::size_t i = 0; i < kPeople; ++i) {
        pools[0].push_back({i, 0});
        for (std::size_t l = 0; l < c; ++l) pools[1].push_back({i, l});
        pools[2].push_back({i, 0});
        for (std::size_t t = 3; t < 6; ++t) pools[t].push_back({i, 0});
    }
    Rng rng(seed * 0xD1B54A32D192ED03ull + c * 7 + 1);
    for (auto& pool : pools) rng.shuffle(pool);

    std::vector<Question> out;
    const std::string prefix = question_prefix(b.spec);
    for (int kind = 0; kind < 2; ++kind) {
        std::vector<std::size_t> cursor(6, 0);
        for (std::size_t q = 0; q < per_kind; ++q) {
            std::size_t t = static_cast<std::size_t>(kind) * 3 + q % 3;
            while (cursor[t] >= pools[t].size()) t = static_cast<std::size_t>(kind) * 3 + (t + 1) % 3;
            const Slot slot = pools[t][cursor[t]++];
            const auto& person = b.people[slot.person];
            const auto& mem = b.memberships[slot.person];
            const std::string name = lower(person.name);

            Question qu;
            qu.kind = kind == 0 ? QuestionKind::Direct : QuestionKind::Join;
            qu.template_id = t;
            qu.subject = name;
            std::string num = std::to_string(q);
            qu.id = prefix + (kind == 0 ? "-d" : "-j") + std::string(num.size() < 2 ? "0" : "") + num;
            qu.evidence.push_back(chunk_of(ChunkKind::Membership, "person:" + person.name));
            switch (t) {
                case 0:
                    qu.text = "which projects does " + name + " belong to ?";
                    for (const auto& l : mem.links) qu.answers.push_back(b.projects[l.project].title);
                    break;
                case 1: {
                    const auto& l = mem.links[slot.link];
                    qu.text = "which role does " + name + " have in " + lower(b.projects[l.project].title) + " ?";
                    qu.answers.push_back(l.role);
                    break;
                }
                case 2:
                    qu.text = "which department is " + name + " part of ?";
                    qu.answers.push_back(mem.links.front().department);
                    break;
                default:
                    qu.text = t == 3   ? "what are " + name + " 's project domains ?"
                              : t == 4 ? "in which years did " + name + " 's projects begin ?"
                                       : "who sponsors " + name + " 's projects ?";
                    for (const auto& l : mem.links) {
                        const auto& p = b.projects[l.project];
                        qu.answers.push_back(t == 3 ? p.domain : t == 4 ? p.year_started : p.sponsor);
                        qu.evidence.push_back(chunk_of(ChunkKind::Project, "project:" + p.title));
                    }
                    break;
            }
            qu.gold_positions = compute_gold_token_positions(b, qu);
            out.push_back(std::move(qu));
        }
    }
    return out;
}

CorpusBundle generate_bundle(const CorpusSpec& spec) {
    auto b = generate_corpus(spec);
    b.questions = generate_questions(b, spec.questions_per_kind, spec.seed);
    return b;
}

CorpusBundle generate_similar_names_variant(const CorpusSpec& spec) {
    CorpusSpec s = spec;
    s.variant = NameVariant::Similar;
    return generate_bundle(s);
}

std::vector<std::uint32_t> compute_gold_token_positions(const CorpusBundle& bundle, const Question& question) {
    std::vector<std::uint32_t> out;
    for (const auto& answer : question.answers) {
        const auto ids = tokenize(answer, bundle.vocab).ids;
        bool found = false;
        for (auto cid : question.evidence) {
            const auto& ch = bundle.chunks.at(cid);
            for (std::size_t i = 0; i < ch.tokens.size(); ++i) {
                if (std::find(ids.begin(), ids.end(), ch.tokens[i]) != ids.end()) {
                    out.push_back(static_cast<std::uint32_t>(cid * kChunkTokens + i));
                    found = true;
                }
            }
        }
        KVC_CHECK(found, ErrorCode::Internal, "answer '" + answer + "' missing from evidence of " + question.id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::uint32_t> token_occurrences(const CorpusBundle& bundle, const std::string& word) {
    std::vector<std::uint32_t> out;
    const auto id = bundle.vocab.find(lower(word));
    if (!id) return out;
    for (const auto& ch : bundle.chunks) {
        for (std::size_t i = 0; i < ch.tokens.size(); ++i) {
            if (ch.tokens[i] == *id) out.push_back(static_cast<std::uint32_t>(ch.id * kChunkTokens + i));
        }
    }
    return out;
}

void save_bundle(const CorpusBundle& b, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path root(dir);
    {
        std::ofstream out(root / "corpus.jsonl", std::ios::trunc | std::ios::binary);
        KVC_CHECK(out.good(), ErrorCode::MissingArtifact, "cannot write " + (root / "corpus.jsonl").string());
        for (const auto& c : b.chunks) {
            json row = {{"id", c.id}, {"kind", chunk_kind_name(c.kind)}, {"text", c.text}, {"refs", c.refs}};
            out << row.dump() << '\n';
        }
    }
    {
        std::ofstream out(root / "questions.jsonl", std::ios::trunc | std::ios::binary);
        for (const auto& q : b.questions) {
            json row = {{"id", q.id},
                        {"kind", to_string(q.kind)},
                        {"template", q.template_id},
                        {"text", q.text},
                        {"subject", q.subject},
                        {"answers", q.answers},
                        {"evidence", q.evidence},
                        {"gold_positions", q.gold_positions}};
            out << row.dump() << '\n';
        }
    }
    {
        json spec = {{"schema_version", 1},
                     {"connectivity", b.spec.connectivity},
                     {"seed", b.spec.seed},
                     {"variant", to_string(b.spec.variant)},
                     {"questions_per_kind", b.spec.questions_per_kind},
                     {"people", kPeople},
                     {"projects", kProjects},
                     {"chunks", b.chunks.size()},
                     {"chunk_tokens", kChunkTokens},
                     {"total_tokens", b.chunks.size() * kChunkTokens},
                     {"fingerprint", to_hex(b.fingerprint())}};
        std::ofstream out(root / "spec.json", std::ios::trunc | std::ios::binary);
        out << spec.dump(2) << '\n';
    }
    b.vocab.save((root / "vocab.txt").string());
}

CorpusBundle load_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    KVC_CHECK(fs::is_directory(root), ErrorCode::MissingArtifact, "bundle directory not found: " + dir);
    CorpusBundle b;
    {
        std::ifstream in(root / "spec.json");
        KVC_CHECK(in.good(), ErrorCode::MissingArtifact, "bundle spec not found in " + dir);
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            auto spec = json::parse(ss.str());
            b.spec.connectivity = spec.at("connectivity").get<std::size_t>();
            b.spec.seed = spec.at("seed").get<std::uint64_t>();
            b.spec.variant = spec.at("variant").get<std::string>() == "similar" ? NameVariant::Similar
                                                                                : NameVariant::Distinct;
            b.spec.questions_per_kind = spec.at("questions_per_kind").get<std::size_t>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Malformed, "spec.json: " + std::string(e.what()));
        }
    }
    b.vocab = Vocabulary::load((root / "vocab.txt").string());
    try {
        for (const auto& row : read_jsonl(root / "corpus.jsonl")) {
            ChunkDoc c;
            c.id = row.at("id").get<std::size_t>();
            c.kind = chunk_kind_from(row.at("kind").get<std::string>());
            c.text = row.at("text").get<std::string>();
            c.refs = row.at("refs").get<std::vector<std::string>>();
            c.tokens = tokenize(c.text, b.vocab).ids;
            KVC_CHECK(c.id == b.chunks.size(), ErrorCode::Malformed, "corpus.jsonl chunk ids out of order");
            b.chunks.push_back(std::move(c));
        }
        for (const auto& row : read_jsonl(root / "questions.jsonl")) {
            Question q;
            q.id = row.at("id").get<std::string>();
            q.kind = row.at("kind").get<std::string>() == "join" ? QuestionKind::Join : QuestionKind::Direct;
            q.template_id = row.at("template").get<std::size_t>();
            q.text = row.at("text").get<std::string>();
            q.subject = row.at("subject").get<std::string>();
            q.answers = row.at("answers").get<std::vector<std::string>>();
            q.evidence = row.at("evidence").get<std::vector<std::size_t>>();
            q.gold_positions = row.at("gold_positions").get<std::vector<std::uint32_t>>();
            b.questions.push_back(std::move(q));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Malformed, "bundle " + dir + ": " + e.what());
    }
    return b;
}

}  // namespace kvc
