#include "bwsq/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <string_view>
#include <vector>

#include "bwsq/error.hpp"
#include "bwsq/random.hpp"

namespace bwsq {

namespace {

// Quantifier phrases per class, in the register of the survey answers.
const std::map<int, std::vector<std::string_view>>& phrases() {
    static const std::map<int, std::vector<std::string_view>> table{
        {5, {"Sehr häufig", "In ganzen Schwärmen", "Überall in großer Menge", "Äußerst zahlreich vorhanden"}},
        {4, {"Häufig", "Ist hier zu Hause und fast überall zu finden", "Gewöhnlich anzutreffen", "Zahlreich"}},
        {3, {"Mittelmäßig vorhanden", "Zuweilen anzutreffen", "Hin und wieder zu sehen", "Mäßig verbreitet"}},
        {2, {"Selten", "Kommt selten vor", "Nur wenige Stücke", "Selten zu sehen"}},
        {1, {"Höchst selten", "Äußerst selten", "Nur ganz vereinzelt", "Ausnahmsweise einmal gesehen"}},
        {0, {"Kommt nicht vor", "Horstet dahier nicht", "Wird hier nicht gesehen", "Fehlt gänzlich"}},
        {-1, {"Kommt nicht mehr vor", "Ist ausgerottet", "Seit Jahren verschwunden", "Längst ausgestorben"}},
    };
    return table;
}

constexpr std::array<std::string_view, 8> kContexts{
    "", " in den Waldtheilen", " zur Winterszeit", " im ganzen Revier",
    " in den Auen", " an den Weihern", " im Gebirge", " auf den Feldern"};

constexpr std::array<std::string_view, 24> kPlaces{
    "Isar", "Amper", "Moosach", "Loisach", "Würm", "Paar", "Ilm", "Abens", "Vils", "Rott", "Inn", "Salzach",
    "Lech", "Wertach", "Iller", "Mindel", "Zusam", "Altmühl", "Regen", "Naab", "Pegnitz", "Rednitz", "Main", "Saale"};

constexpr std::array<std::string_view, 10> kSpecies{
    "Wolf", "Luchs", "Biber", "Fischotter", "Auerhahn", "Wildgans", "Kreuzotter", "Uhu", "Reh", "Wildente"};

}  // namespace

Corpus synthesize_corpus(const SynthConfig& config) {
    if (config.n_records == 0) throw InvalidArgument("synthetic corpus needs at least one record");
    if (config.n_species == 0 || config.n_offices == 0) throw InvalidArgument("need at least one species and office");

    std::vector<int> classes;
    std::vector<double> cumulative;
    double total = 0.0;
    for (int c = kMinClass; c <= kMaxClass; ++c) {
        double w = 1.0;
        if (!config.class_weights.empty()) {
            auto it = config.class_weights.find(c);
            w = it == config.class_weights.end() ? 0.0 : it->second;
        }
        if (w < 0.0) throw InvalidArgument("class weights must be non-negative");
        if (w == 0.0) continue;
        total += w;
        classes.push_back(c);
        cumulative.push_back(total);
    }
    if (classes.empty()) throw InvalidArgument("all class weights are zero");

    Rng rng(config.seed);
    std::set<std::string> seen;
    std::vector<SurveyRecord> records;
    records.reserve(config.n_records);
    char id[32];
    for (std::size_t i = 0; i < config.n_records; ++i) {
        const double u = rng.uniform() * total;
        const auto ci = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                                 cumulative.begin());
        const int cls = classes[std::min(ci, classes.size() - 1)];
        const auto& options = phrases().at(cls);

        std::string text;
        for (int attempt = 0;; ++attempt) {
            text = std::string(options[rng.below(options.size())]);
            text += kContexts[rng.below(kContexts.size())];
            // Place names keep texts distinct; more of them once collisions start.
            const int places = 1 + attempt / 8;
            for (int p = 0; p < places; ++p) text += (p == 0 ? " an der " : " und der ") + std::string(kPlaces[rng.below(kPlaces.size())]);
            text += '.';
            if (seen.insert(text).second) break;
            if (attempt > 200) throw Error("synthetic corpus: could not generate a unique text");
        }

        SurveyRecord r;
        std::snprintf(id, sizeof id, "R%05zu", i + 1);
        r.record_id = id;
        const auto species = i % config.n_species;
        r.species_id = species < kSpecies.size() ? std::string(kSpecies[species]) : "Art" + std::to_string(species + 1);
        std::snprintf(id, sizeof id, "FA%03zu", rng.below(config.n_offices) + 1);
        r.office_id = id;
        r.text = std::move(text);
        r.multi_label = cls;
        r.binary_label = cls >= 1 ? 1 : 0;
        r.intensity = (cls + 1 + rng.uniform()) / 7.0;
        records.push_back(std::move(r));
    }
    Corpus corpus(std::move(records), Provenance{"synthetic seed=" + std::to_string(config.seed), ""});
    if (config.test_fraction > 0.0) return split(corpus, config.test_fraction, config.seed);
    return corpus;
}

}  // namespace bwsq
