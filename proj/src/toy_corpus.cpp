#include "relevancy/toy_corpus.hpp"

#include <algorithm>
#include <unordered_map>

#include "relevancy/errors.hpp"
#include "relevancy/random.hpp"

namespace relevancy::toy {

namespace {

struct Lexicon {
  const char* id;
  const char* description;
  const char* domain;
  std::vector<std::string> formal;
  std::vector<std::string> informal;
  std::vector<std::string> implicit;
  // Incidental words a hard negative may share with the topic.
  std::vector<std::string> surface;
};

const std::vector<std::string> kDomains = {
    "Social & Community Issues", "Industry & Business",
    "Economics & Finance",       "Health",
    "Law & Crime",               "Environment & Disasters",
    "Politics & Governance",     "Digital & Technology",
    "Infrastructure & Transportation", "Energy",
    "Others"};

const std::vector<Lexicon>& lexicon() {
  static const std::vector<Lexicon> topics = {
      {"monetary-policy", "Monetary policy", "Economics & Finance",
       {"bi", "suku", "bunga", "acuan", "moneter", "likuiditas", "gubernur", "tahan"},
       {"kpr", "bunganya", "deposito", "nabung", "tenor", "kredit", "bankir", "bpr"},
       {"angsuran", "tabungan", "rekening", "gajian", "pinjaman", "akad", "teller", "cicilan"},
       {"bank", "uang", "persen"}},
      {"oil-prices", "Oil prices", "Energy",
       {"opec", "minyak", "mentah", "brent", "barel", "pasokan", "pangkas", "melonjak"},
       {"kilang", "tanker", "wti", "arab", "saudi", "sumur", "crude", "timteng"},
       {"tambang", "kapal", "pelabuhan", "offshore", "pipa", "rig", "teluk", "drum"},
       {"naik", "dunia", "pasar"}},
      {"fuel-prices", "Fuel prices", "Energy",
       {"bbm", "pertalite", "solar", "subsidi", "liter", "spbu", "pertamax", "penyesuaian"},
       {"bensin", "dompet", "tipis", "isi", "tank", "full", "pom", "ngisi"},
       {"ojol", "tarif", "angkot", "antre", "jerigen", "motor", "ongkos", "eceran"},
       {"naik", "jalan", "mobil"}},
      {"tech-layoffs", "Tech layoffs", "Digital & Technology",
       {"phk", "karyawan", "startup", "efisiensi", "pemutusan", "pesangon", "teknologi", "rampingkan"},
       {"layoff", "tokped", "divisi", "temen", "kantor", "kena", "resign", "hrd"},
       {"laptop", "dikembalikan", "zoom", "mendadak", "lowongan", "linkedin", "pamit", "akses"},
       {"kerja", "aplikasi", "online"}},
      {"food-prices", "Food prices", "Economics & Finance",
       {"pangan", "komoditas", "beras", "harga", "bulog", "stok", "gabah", "distribusi"},
       {"mahal", "emak", "sembako", "belanjaan", "migor", "telur", "gula", "sayur"},
       {"cabai", "sekilo", "100rb", "bawang", "tukang", "warung", "dapur", "gilaan"},
       {"makan", "masak", "pasar"}},
      {"corruption", "Corruption", "Law & Crime",
       {"korupsi", "kpk", "tersangka", "suap", "gratifikasi", "penyidik", "anggaran", "ditahan"},
       {"korup", "ott", "maling", "tikus", "berdasi", "duitnya", "nilep", "sogok"},
       {"duit", "rakyat", "dimakan", "koruptor", "amplop", "proyek", "pejabat", "markup"},
       {"uang", "negara", "kantor"}},
      {"crypto", "Crypto", "Digital & Technology",
       {"kripto", "bitcoin", "aset", "digital", "bappebti", "blockchain", "volatilitas", "exchange"},
       {"btc", "koin", "altcoin", "hodl", "cuan", "moon", "nyangkut", "trading"},
       {"rug", "pull", "rugi", "50jt", "token", "holder", "pump", "dump"},
       {"aplikasi", "online", "uang"}},
      {"elections", "Elections", "Politics & Governance",
       {"pemilu", "kpu", "caleg", "suara", "tps", "kampanye", "pilpres", "paslon"},
       {"nyoblos", "capres", "golput", "coblos", "survei", "debat", "baliho", "timses"},
       {"tinta", "jari", "bilik", "antrean", "undangan", "saksi", "hitung", "spanduk"},
       {"pilih", "nomor", "ada"}},
      {"gambling", "Gambling", "Law & Crime",
       {"judi", "perjudian", "daring", "situs", "bandar", "pemblokiran", "kominfo", "taruhan"},
       {"slot", "gacor", "maxwin", "depo", "wd", "jp", "scatter", "zeus"},
       {"kalah", "gadai", "utang", "begadang", "modal", "balik", "hoki", "hangus"},
       {"main", "rank", "game"}},
      {"inflation", "Inflation and price stability", "Economics & Finance",
       {"inflasi", "ihk", "bps", "deflasi", "stabilitas", "indeks", "konsumen", "tahunan"},
       {"kantong", "boncos", "gaji", "kere", "melarat", "pusing", "ngirit", "boros"},
       {"indomie", "3500", "1500", "dulu", "sekarang", "receh", "kembalian", "jajan"},
       {"naik", "bulan", "uang"}},
      {"floods", "Floods", "Environment & Disasters",
       {"banjir", "bpbd", "genangan", "evakuasi", "curah", "hujan", "pengungsi", "tanggul"},
       {"kebanjiran", "kelelep", "rob", "luber", "air", "selutut", "sepinggang", "ngungsi"},
       {"perahu", "karet", "kasur", "basah", "mogok", "terendam", "lumpur", "pompa"},
       {"jalan", "rumah", "sore"}},
      {"dengue", "Dengue fever", "Health",
       {"dbd", "demam", "berdarah", "nyamuk", "aedes", "fogging", "trombosit", "kasus"},
       {"opname", "infus", "panas", "meriang", "lemes", "rs", "dirawat", "tipes"},
       {"jentik", "abate", "kelambu", "lotion", "bintik", "merah", "kuras", "bak"},
       {"sakit", "rumah", "sore"}},
      {"traffic", "Traffic congestion", "Infrastructure & Transportation",
       {"kemacetan", "lalu", "lintas", "ganjil", "genap", "tol", "volume", "kendaraan"},
       {"macet", "mampet", "stuck", "klakson", "merayap", "parah", "pulang", "telat"},
       {"pegel", "podcast", "ngantuk", "sunset", "setir", "kopling", "rem", "bokong"},
       {"jalan", "mobil", "sore"}},
      {"football", "Football league", "Others",
       {"liga", "pertandingan", "klub", "gol", "pssi", "timnas", "kompetisi", "stadion"},
       {"bola", "nobar", "offside", "wasit", "kartu", "penalti", "menang", "skor"},
       {"jersey", "tribun", "chant", "syal", "koreo", "ultras", "tendangan", "kandang"},
       {"main", "game", "malam"}},
      {"education-costs", "Education costs", "Social & Community Issues",
       {"ukt", "biaya", "pendidikan", "kuliah", "mahasiswa", "universitas", "sekolah", "spp"},
       {"kampus", "semesteran", "maba", "beasiswa", "skripsi", "dosen", "ospek", "nunggak"},
       {"seragam", "buku", "anak", "daftar", "ulang", "ortu", "jual", "sawah"},
       {"uang", "bulan", "kota"}},
      {"housing", "Housing affordability", "Industry & Business",
       {"properti", "perumahan", "hunian", "pengembang", "rusun", "apartemen", "sertifikat", "lahan"},
       {"ngontrak", "kosan", "kos", "dp", "bangun", "cluster", "mertua", "nebeng"},
       {"pindah", "sempit", "kamar", "sewa", "tetangga", "numpang", "lantai", "kunci"},
       {"kota", "ada", "malam"}},
      {"online-scams", "Online scams", "Digital & Technology",
       {"penipuan", "siber", "phishing", "modus", "pelaku", "korban", "polisi", "apk"},
       {"scam", "tipu", "otp", "kurir", "link", "hadiah", "undian", "klik"},
       {"transfer", "nomor", "asing", "saldo", "hilang", "paket", "wa", "telepon"},
       {"aplikasi", "online", "hp"}},
      {"air-pollution", "Air pollution", "Environment & Disasters",
       {"polusi", "udara", "emisi", "kualitas", "pm2", "iqair", "pencemaran", "karbon"},
       {"sesak", "batuk", "asap", "kabut", "masker", "ispa", "buram", "engap"},
       {"langit", "abu", "gedung", "jemuran", "dahak", "tenggorokan", "perih", "mata"},
       {"kota", "pagi", "jalan"}},
      {"electricity-tariffs", "Electricity tariffs", "Energy",
       {"listrik", "pln", "golongan", "kwh", "daya", "tegangan", "va", "pelanggan"},
       {"meteran", "njeglek", "padam", "byarpet", "kipas", "ac", "bunyi", "tit"},
       {"setrika", "kulkas", "magicom", "lilin", "senter", "gelap", "cabut", "colokan"},
       {"rumah", "bulan", "malam"}},
      {"unemployment", "Unemployment", "Social & Community Issues",
       {"pengangguran", "ketenagakerjaan", "lapangan", "pencari", "angkatan", "tpt", "bursa", "pelatihan"},
       {"nganggur", "lamaran", "loker", "rebahan", "interview", "cv", "ditolak", "ngelamar"},
       {"ijazah", "fotokopi", "map", "coklat", "magang", "kenalan", "orang", "dalam"},
       {"kerja", "kota", "pagi"}},
  };
  return topics;
}

const std::vector<std::string> kFormalFiller = {
    "pemerintah", "menurut", "laporan", "resmi", "terbaru",
    "pekan", "tahun", "nasional", "data", "pihak"};
const std::vector<std::string> kInformalFiller = {
    "lagi", "nih", "sih", "banget", "gw", "aja",
    "udah", "kok", "wkwk", "deh", "bgt", "anjir"};
const std::vector<std::string> kChatter = {
    "makan", "siang", "apa", "ya", "hari", "ini", "promo", "shopee", "nonton",
    "film", "tidur", "kopi", "libur", "kucing", "mobile", "legends", "mythic"};

const std::vector<std::string> kInformalTopics = {
    "fuel-prices", "tech-layoffs", "food-prices", "corruption", "crypto",
    "inflation",   "floods",       "elections",   "gambling",   "traffic"};
const std::vector<std::string> kImplicitTopics = {
    "food-prices", "corruption", "crypto",       "inflation",  "fuel-prices",
    "gambling",    "elections",  "tech-layoffs", "unemployment", "education-costs"};

std::vector<std::string> pick(const std::vector<std::string>& pool,
                              std::size_t n, SplitMix64& rng) {
  std::vector<std::string> copy = pool;
  n = std::min(n, copy.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(copy[i], copy[i + rng.below(copy.size() - i)]);
  }
  copy.resize(n);
  return copy;
}

std::string join_shuffled(std::vector<std::string> words, SplitMix64& rng) {
  seeded_shuffle(std::span<std::string>(words), rng);
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

ToyCorpus make_toy_corpus(const ToyCorpusSpec& spec) {
  ToyCorpus corpus;
  corpus.spec = spec;
  corpus.domains = kDomains;
  SplitMix64 rng(spec.seed);

  const auto& lex = lexicon();
  for (const auto& t : lex) {
    corpus.contexts.push_back(TopicContext{t.id, t.description, t.domain});
  }

  std::vector<TextSample> raw;
  for (const auto& t : lex) {
    for (std::size_t i = 0; i < spec.formal_per_topic; ++i) {
      auto words = pick(t.formal, 3, rng);
      auto filler = pick(kFormalFiller, 2, rng);
      words.insert(words.end(), filler.begin(), filler.end());
      raw.push_back(TextSample{std::string(t.id) + "-s1-" + std::to_string(i),
                               join_shuffled(std::move(words), rng),
                               Register::formal, Stage::one, "toy:news",
                               std::string(t.id)});
    }
  }
  const std::size_t informal_topics =
      std::min(spec.informal_topics, kInformalTopics.size());
  for (std::size_t k = 0; k < informal_topics; ++k) {
    const auto& t = *std::find_if(lex.begin(), lex.end(), [&](const Lexicon& l) {
      return l.id == kInformalTopics[k];
    });
    for (std::size_t i = 0; i < spec.informal_per_topic; ++i) {
      auto words = pick(t.informal, 2, rng);
      if (rng.uniform() < 0.5) words.push_back(pick(t.formal, 1, rng).front());
      auto filler = pick(kInformalFiller, 3, rng);
      words.insert(words.end(), filler.begin(), filler.end());
      raw.push_back(TextSample{std::string(t.id) + "-s2-" + std::to_string(i),
                               join_shuffled(std::move(words), rng),
                               Register::informal, Stage::two, "toy:social",
                               std::string(t.id)});
    }
  }
  corpus.texts = dedup_samples(raw);

  for (const auto& t : lex) {
    corpus.blocklists.push_back(blocklist_from_description(
        TopicContext{t.id, t.description, t.domain}, t.formal));
    std::vector<std::string> negative = kChatter;
    negative.insert(negative.end(), t.surface.begin(), t.surface.end());
    corpus.banks[t.id] = MockGenerationProvider::Bank{t.implicit, negative};
  }
  const std::size_t implicit_topics =
      std::min(spec.implicit_topics, kImplicitTopics.size());
  corpus.implicit_topic_ids.assign(kImplicitTopics.begin(),
                                   kImplicitTopics.begin() + static_cast<long>(implicit_topics));
  return corpus;
}

MockLabelProvider::Oracle topic_match_oracle(
    const std::vector<TopicContext>& contexts,
    const std::vector<TextSample>& texts) {
  auto by_description = std::make_shared<std::unordered_map<std::string, std::string>>();
  auto by_text = std::make_shared<std::unordered_map<std::string, std::string>>();
  for (const auto& c : contexts) (*by_description)[normalize_text(c.description)] = c.id;
  for (const auto& t : texts) {
    if (t.topic_id) (*by_text)[normalize_text(t.text)] = *t.topic_id;
  }
  return [by_description, by_text](const LabelRequest& r) {
    auto c = by_description->find(normalize_text(r.context_description));
    auto t = by_text->find(normalize_text(r.text));
    if (c == by_description->end() || t == by_text->end()) {
      return Label::not_relevant;
    }
    return c->second == t->second ? Label::relevant : Label::not_relevant;
  };
}

ToyDataset build_toy_dataset(const ToyCorpus& corpus,
                             const NegativeBudget& budget, std::uint64_t seed) {
  ToyDataset out;
  out.contexts = corpus.contexts;
  out.texts = corpus.texts;
  const ContextRegistry registry(corpus.contexts, corpus.domains);
  const auto matrix = topic_similarity(corpus.contexts);
  auto candidates = build_candidate_pairs(corpus.texts,
                                          topics_from_samples(corpus.texts),
                                          registry, matrix, budget, seed);

  std::unordered_map<std::string, const TextSample*> text_by_id;
  for (const auto& t : corpus.texts) text_by_id[t.id] = &t;
  const TemplateRegistry templates;
  std::vector<LabelRequest> requests;
  requests.reserve(candidates.size());
  for (const auto& p : candidates) {
    requests.push_back(LabelRequest{registry.at(p.context_id).description,
                                    text_by_id.at(p.text_id)->text, p.stage,
                                    templates.for_stage(p.stage).id});
  }
  MockLabelProvider provider(topic_match_oracle(corpus.contexts, corpus.texts));
  LabelCache cache;
  const auto labeled = label_batch(provider, templates, requests, cache, 4);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!labeled[i].ok()) throw LabelingError(labeled[i].error);
    candidates[i].label = labeled[i].result->label;
    candidates[i].label_source = LabelSource::oracle;
  }
  out.pairs = std::move(candidates);

  MockGenerationProvider generator(corpus.banks, seed, 0.1);
  for (std::size_t k = 0; k < corpus.implicit_topic_ids.size(); ++k) {
    const auto& topic = registry.at(corpus.implicit_topic_ids[k]);
    const auto& blocklist = *std::find_if(
        corpus.blocklists.begin(), corpus.blocklists.end(),
        [&](const KeywordBlocklist& b) { return b.topic_id() == topic.id; });
    const auto style = static_cast<Style>(k % 3);
    GenerationSpec positive{topic.id, topic.description,
                            corpus.spec.implicit_per_topic, style,
                            Polarity::implicit_positive};
    auto batch = generate_implicit(generator, positive, blocklist,
                                   10 * corpus.spec.implicit_per_topic + 10);
    GenerationSpec negative{topic.id, topic.description,
                            corpus.spec.hard_negatives_per_topic, style,
                            Polarity::hard_negative};
    auto negatives = generate_hard_negatives(generator, negative);
    for (auto* b : {&batch, &negatives}) {
      out.texts.insert(out.texts.end(), b->samples.begin(), b->samples.end());
      out.pairs.insert(out.pairs.end(), b->pairs.begin(), b->pairs.end());
    }
  }
  return out;
}

}  // namespace relevancy::toy
