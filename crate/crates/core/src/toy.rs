//! Seeded generator for the bundled toy corpora.
//!
//! Bodies are assembled from Turkish sentence templates dense in words the
//! mock rewriter knows how to replace, so a mock rewrite of any article
//! differs from its original with near certainty. No template or filler uses
//! a replacement word, which keeps the two classes separable.

use std::collections::{BTreeSet, HashSet};

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{body_key, Article, OriginLabel};
use crate::synthesis::MockRewriter;

pub const TOY_SOURCES: [&str; 4] = ["Merkez Haber", "Ege Postası", "Karadeniz Gündem", "Anadolu Ekspres"];

const TEMPLATES: &[&str] = &[
    "{person} {topic} hakkında önemli bir açıklama yaptı.",
    "Yetkililer şehirde yeni bir çalışma başlattıklarını açıkladı.",
    "{inst} başkanı toplantıda {topic} alanındaki sorunlar hakkında bilgi verdi.",
    "{person} açıklamada {topic} alanında büyük bir artış olduğunu belirtti.",
    "Vatandaşlar {topic} konusunda {inst} kurumundan destek bekliyor.",
    "Bu olaydan sonra yetkililer bölgede gerekli önlemleri aldı.",
    "{person} yeni projesi ile {city} halkına hızlı bir çözüm sunmayı planlıyor.",
    "Ayrıca fiyatlar {topic} alanında yüksek seviyede seyretti.",
    "{inst} düşük gelirli vatandaşlar için destek amacıyla yeni çalışmalar başlattı.",
    "Konu ile ilgili bilgiler kısa zaman içinde paylaşılacak.",
    "{person} durum hakkında gerekli bilgi verdi ve sorun kısa sürede çözülecek dedi.",
    "Yetkililer kişiler arasında bir sorun yaşanmadığını söyledi.",
    "Toplantı sona erdikten sonra {person} basına açıklama yaptı.",
    "Şehir merkezinde {num} kişi bu çalışma için gönüllü oldu.",
    "Bölgede fiyat artış oranı son zaman içinde yüksek seyretti.",
    "Halk {topic} konuda yeni bir adım bekliyor.",
    "{inst} {topic} alanında azalma yaşandığını açıkladı.",
    "Önemli bir amaç {city} halkına daha iyi hizmet sunmak olarak belirlendi.",
    "Olay yerine kısa zaman içinde {num} kişilik ekip sevk edildi.",
    "{person} süreç hakkında vatandaşlar ile bir toplantı yaptı.",
    "{city} şehirde yaşayan vatandaş {topic} projesi için {num} imza topladı.",
    "Açıklamada {topic} fiyat düzenlemesi hakkında yeni bilgiler yer aldı.",
    "Yetkililer olayın nedenlerini araştırmak amacıyla büyük bir çalışma yaptı.",
    "{inst} başkanı {city} için önemli bir proje hazırladıklarını söyledi.",
];

const PERSONS: &[&str] = &[
    "Ahmet Yılmaz",
    "Ayşe Demir",
    "Mehmet Kaya",
    "Fatma Şahin",
    "Mustafa Çelik",
    "Zeynep Arslan",
    "Emre Koç",
    "Elif Aydın",
    "Vali İsmail Öztürk",
    "Belediye Başkanı Selin Yıldız",
];
const TOPICS: &[&str] = &["ulaşım", "eğitim", "sağlık", "tarım", "enerji", "konut", "turizm", "çevre", "spor", "kültür"];
const CITIES: &[&str] = &["Ankara", "İzmir", "Bursa", "Trabzon", "Konya", "Antalya", "Samsun", "Eskişehir", "Iğdır"];
const INSTITUTIONS: &[&str] = &["Belediye", "Valilik", "Ticaret Odası", "İl Sağlık Müdürlüğü", "Bakanlık", "Üniversite"];

fn fill(template: &str, rng: &mut ChaCha8Rng) -> String {
    let mut out = template.to_string();
    for (slot, pool) in [
        ("{person}", PERSONS),
        ("{topic}", TOPICS),
        ("{city}", CITIES),
        ("{inst}", INSTITUTIONS),
    ] {
        while out.contains(slot) {
            out = out.replacen(slot, pool.choose(rng).expect("non-empty pool"), 1);
        }
    }
    while out.contains("{num}") {
        out = out.replacen("{num}", &rng.random_range(10..500).to_string(), 1);
    }
    out
}

fn body(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(6..=10);
    let mut sentences: Vec<String> = Vec::with_capacity(n);
    for _ in 0..n {
        let t = TEMPLATES.choose(rng).expect("templates");
        sentences.push(fill(t, rng));
    }
    sentences.join(" ")
}

fn slug(source: &str) -> String {
    source
        .chars()
        .filter(|c| c.is_alphanumeric())
        .map(|c| match c {
            'ı' | 'İ' | 'I' => 'i',
            'ş' | 'Ş' => 's',
            'ğ' | 'Ğ' => 'g',
            'ü' | 'Ü' => 'u',
            'ö' | 'Ö' => 'o',
            'ç' | 'Ç' => 'c',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

fn title(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} için {} gündemi",
        CITIES.choose(rng).expect("cities"),
        TOPICS.choose(rng).expect("topics")
    )
}

fn article_stream(
    rng: &mut ChaCha8Rng,
    seen: &mut HashSet<String>,
    id: String,
    source: &str,
    year: i32,
) -> Article {
    let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    loop {
        let b = body(rng);
        if !seen.insert(body_key(&b)) {
            continue;
        }
        let day = rng.random_range(0..365);
        return Article {
            id,
            source: source.to_string(),
            published_at: start + Duration::days(day),
            title: Some(title(rng)),
            body: b,
            origin: None,
        };
    }
}

/// `per_source` human-written articles for each of [`TOY_SOURCES`], dated in
/// `year`, with unique bodies and the origin set.
pub fn human_corpus(seed: u64, per_source: usize, year: i32) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(per_source * TOY_SOURCES.len());
    for source in TOY_SOURCES {
        for k in 0..per_source {
            let id = format!("{}-{year}-{k:04}", slug(source));
            let mut a = article_stream(&mut rng, &mut seen, id, source, year);
            a.origin = Some(OriginLabel::HumanWritten);
            out.push(a);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCorpus {
    /// Unlabeled articles (no origin field).
    pub articles: Vec<Article>,
    /// Ids whose body was produced by the mock rewriter.
    pub rewritten_ids: BTreeSet<String>,
}

/// Unlabeled multi-year corpus: `per_cell` articles for every source and
/// year, a seeded `ai_fraction` of them passed through the mock rewriter.
pub fn external_corpus(seed: u64, per_cell: usize, years: &[i32], ai_fraction: f64) -> ExternalCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0e47);
    let rewriter = MockRewriter::with_defaults(seed);
    let mut seen = HashSet::new();
    let mut articles = Vec::new();
    let mut rewritten_ids = BTreeSet::new();
    for source in TOY_SOURCES {
        for &year in years {
            for k in 0..per_cell {
                let id = format!("ext-{}-{year}-{k:04}", slug(source));
                let mut a = article_stream(&mut rng, &mut seen, id, source, year);
                if rng.random_bool(ai_fraction) {
                    a.body = rewriter.rewrite_text(&a.body);
                    rewritten_ids.insert(a.id.clone());
                }
                articles.push(a);
            }
        }
    }
    ExternalCorpus { articles, rewritten_ids }
}
