#include "corpusmap/synthetic.hpp"

#include <cstdio>
#include <random>

#include "corpusmap/error.hpp"

namespace corpusmap::synthetic {

namespace {

struct Theme {
    const char* name;
    std::vector<std::string> words;
};

const std::vector<Theme>& themes()
{
    static const std::vector<Theme> all{
        {"Cancer Treatment",
         {"tumor", "chemotherapy", "oncology", "carcinoma", "metastasis", "radiotherapy", "immunotherapy", "malignant",
          "biopsy", "lymphoma", "remission", "cytotoxic", "neoplasm", "checkpoint", "resection", "oncogene"}},
        {"Cystic Fibrosis",
         {"cftr", "mucus", "pulmonary", "modulator", "ivacaftor", "sputum", "pancreatic", "exacerbation", "airway",
          "chloride", "bronchiectasis", "pseudomonas", "lumacaftor", "spirometry", "sweat", "elexacaftor"}},
        {"Cardiac Surgery",
         {"cardiac", "valve", "bypass", "coronary", "aortic", "stent", "arrhythmia", "ventricular", "myocardial",
          "angioplasty", "ischemia", "atrial", "pacemaker", "sternotomy", "graft", "ejection"}},
        {"Infectious Disease",
         {"virus", "vaccine", "antibody", "pathogen", "antiviral", "transmission", "outbreak", "serology", "influenza",
          "antibiotic", "resistance", "bacterial", "epidemic", "incubation", "immunization", "viral"}},
        {"Neurodegeneration",
         {"neuron", "alzheimer", "dementia", "amyloid", "parkinson", "cognitive", "synaptic", "tau", "hippocampus",
          "dopamine", "neurodegeneration", "cortex", "plaque", "microglia", "memory", "axonal"}},
        {"Diabetes Care",
         {"insulin", "glucose", "diabetes", "glycemic", "pancreas", "metformin", "hba1c", "obesity", "adipose",
          "hyperglycemia", "ketoacidosis", "sensitivity", "beta", "metabolic", "glp1", "retinopathy"}},
        {"Mental Health",
         {"depression", "anxiety", "psychiatric", "antidepressant", "psychotherapy", "schizophrenia", "bipolar",
          "mood", "suicide", "cognitive", "stress", "ptsd", "serotonin", "counseling", "wellbeing", "trauma"}},
        {"Genomic Sequencing",
         {"genome", "sequencing", "variant", "mutation", "allele", "transcriptome", "exome", "polymorphism",
          "crispr", "methylation", "epigenetic", "rna", "chromosome", "locus", "haplotype", "genotype"}},
    };
    return all;
}

const std::vector<std::string>& filler()
{
    static const std::vector<std::string> words{
        "patients", "study", "results", "clinical", "analysis", "significant", "cohort", "trial", "outcomes",
        "treatment", "observed", "increased", "reduced", "associated", "risk", "data", "methods", "evidence",
        "randomized", "baseline", "follow", "group", "effect", "compared"};
    return words;
}

const std::vector<std::string> kJournals{"Lancet", "BMJ", "JAMA", "Nature Medicine", "PLoS One", "Cell Reports",
                                         "NEJM", "Scientific Reports"};
const std::vector<std::string> kSurnames{"Smith", "Garcia", "Chen", "Kumar", "Novak", "Okafor", "Silva", "Tanaka",
                                         "Muller", "Rossi", "Dubois", "Kowalski"};

std::string capitalized(std::string w)
{
    if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
}

// Pseudo-words for themes beyond the built-in list.
std::vector<std::string> generated_words(std::size_t theme, std::mt19937_64& rng)
{
    static const char* syllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "zu", "pe", "qua", "dri"};
    std::vector<std::string> out;
    for (int i = 0; i < 16; ++i) {
        std::string w = "x" + std::to_string(theme);
        for (int s = 0; s < 3; ++s) w += syllables[rng() % 12];
        out.push_back(w);
    }
    return out;
}

}  // namespace

Corpus make_corpus(const CorpusOptions& opts)
{
    if (opts.doc_count == 0 || opts.theme_count == 0) fail(ErrorCode::invalid_argument, "synthetic corpus: empty request");
    if (opts.span_days < 1 || opts.min_sentences < 1 || opts.max_sentences < opts.min_sentences) {
        fail(ErrorCode::invalid_argument, "synthetic corpus: invalid ranges");
    }
    std::mt19937_64 rng(opts.seed);
    auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    Corpus c;
    std::vector<std::vector<std::string>> vocab;
    for (std::size_t t = 0; t < opts.theme_count; ++t) {
        if (t < themes().size()) {
            c.theme_names.push_back(themes()[t].name);
            vocab.push_back(themes()[t].words);
        } else {
            c.theme_names.push_back("Theme " + std::to_string(t));
            vocab.push_back(generated_words(t, rng));
        }
    }

    const auto& fill = filler();
    for (std::size_t i = 0; i < opts.doc_count; ++i) {
        const std::size_t theme = pick(opts.theme_count);
        const auto& words = vocab[theme];
        auto word = [&]() -> const std::string& { return rng() % 10 < 7 ? words[pick(words.size())] : fill[pick(fill.size())]; };

        Document d;
        char id[32];
        std::snprintf(id, sizeof id, "doc-%06zu", i);
        d.doc_id = id;
        const int title_len = 3 + static_cast<int>(pick(4));
        for (int w = 0; w < title_len; ++w) {
            if (w > 0) d.title += ' ';
            d.title += capitalized(words[pick(words.size())]);
        }
        const int sentences = opts.min_sentences + static_cast<int>(pick(static_cast<std::size_t>(opts.max_sentences - opts.min_sentences + 1)));
        for (int s = 0; s < sentences; ++s) {
            const int len = 8 + static_cast<int>(pick(8));
            std::string sentence = capitalized(word());
            for (int w = 1; w < len; ++w) sentence += " " + word();
            if (!d.body.empty()) d.body += ' ';
            d.body += sentence + ".";
        }
        d.pub_date = opts.first_day + static_cast<int>(pick(static_cast<std::size_t>(opts.span_days)));
        d.journal = kJournals[pick(kJournals.size())];
        const std::size_t authors = 1 + pick(4);
        for (std::size_t a = 0; a < authors; ++a) {
            d.authors.push_back(kSurnames[pick(kSurnames.size())] + " " + static_cast<char>('A' + pick(26)) + ".");
        }
        c.docs.push_back(std::move(d));
        c.theme.push_back(theme);
    }
    return c;
}

}  // namespace corpusmap::synthetic
