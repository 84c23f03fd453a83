//! Deterministic synthetic fixtures: textured "herb plate" pictures, a
//! deliberately plain low-texture picture, wireframe models and the
//! 88-entry herb catalog. All herb texts are synthetic placeholders.

use crate::content::{Catalog, Ecology, HerbEntry, Morphology};
use crate::imaging::ColorImage;
use crate::pose::WireframeModel;
use crate::rng::XorShift64Star;

/// Size of the shipped catalog.
pub const CATALOG_SIZE: usize = 88;

/// `(content_id, Chinese name, English name)`.
pub const HERBS: [(&str, &str, &str); CATALOG_SIZE] = [
    ("lingzhi", "灵芝", "Lingzhi"),
    ("aiye", "艾叶", "Mugwort leaf"),
    ("baijitian", "巴戟天", "Morinda root"),
    ("baiji", "白及", "Bletilla tuber"),
    ("renshen", "人参", "Ginseng"),
    ("danggui", "当归", "Chinese angelica"),
    ("huangqi", "黄芪", "Astragalus root"),
    ("gancao", "甘草", "Licorice root"),
    ("gouqi", "枸杞", "Goji berry"),
    ("juhua", "菊花", "Chrysanthemum"),
    ("jinyinhua", "金银花", "Honeysuckle flower"),
    ("bohe", "薄荷", "Field mint"),
    ("jiegeng", "桔梗", "Balloon flower root"),
    ("fuling", "茯苓", "Poria"),
    ("baizhu", "白术", "Atractylodes rhizome"),
    ("chuanxiong", "川芎", "Sichuan lovage"),
    ("danshen", "丹参", "Red sage root"),
    ("sanqi", "三七", "Notoginseng"),
    ("tianma", "天麻", "Gastrodia tuber"),
    ("duzhong", "杜仲", "Eucommia bark"),
    ("banlangen", "板蓝根", "Isatis root"),
    ("lianqiao", "连翘", "Forsythia fruit"),
    ("chaihu", "柴胡", "Bupleurum root"),
    ("huanglian", "黄连", "Coptis rhizome"),
    ("huangqin", "黄芩", "Baikal skullcap root"),
    ("dahuang", "大黄", "Rhubarb root"),
    ("mahuang", "麻黄", "Ephedra"),
    ("guizhi", "桂枝", "Cinnamon twig"),
    ("shengjiang", "生姜", "Fresh ginger"),
    ("dazao", "大枣", "Jujube"),
    ("shanyao", "山药", "Chinese yam"),
    ("dihuang", "地黄", "Rehmannia root"),
    ("baishao", "白芍", "White peony root"),
    ("chishao", "赤芍", "Red peony root"),
    ("mudanpi", "牡丹皮", "Tree peony bark"),
    ("wuweizi", "五味子", "Schisandra berry"),
    ("heshouwu", "何首乌", "Fleeceflower root"),
    ("juemingzi", "决明子", "Cassia seed"),
    ("cheqiancao", "车前草", "Plantain herb"),
    ("pugongying", "蒲公英", "Dandelion"),
    ("yuxingcao", "鱼腥草", "Houttuynia"),
    ("yimucao", "益母草", "Motherwort"),
    ("zisu", "紫苏", "Perilla leaf"),
    ("huoxiang", "藿香", "Patchouli herb"),
    ("peilan", "佩兰", "Eupatorium herb"),
    ("banxia", "半夏", "Pinellia tuber"),
    ("chenpi", "陈皮", "Aged tangerine peel"),
    ("houpo", "厚朴", "Magnolia bark"),
    ("cangzhu", "苍术", "Black atractylodes"),
    ("sharen", "砂仁", "Amomum fruit"),
    ("muxiang", "木香", "Costus root"),
    ("xiangfu", "香附", "Cyperus rhizome"),
    ("yujin", "郁金", "Curcuma tuber"),
    ("jianghuang", "姜黄", "Turmeric"),
    ("ezhu", "莪术", "Zedoary rhizome"),
    ("honghua", "红花", "Safflower"),
    ("taoren", "桃仁", "Peach kernel"),
    ("niuxi", "牛膝", "Achyranthes root"),
    ("xuduan", "续断", "Dipsacus root"),
    ("gusuibu", "骨碎补", "Drynaria rhizome"),
    ("yinyanghuo", "淫羊藿", "Epimedium leaf"),
    ("roucongrong", "肉苁蓉", "Cistanche"),
    ("suoyang", "锁阳", "Cynomorium"),
    ("tusizi", "菟丝子", "Dodder seed"),
    ("nvzhenzi", "女贞子", "Privet fruit"),
    ("mohanlian", "墨旱莲", "Eclipta"),
    ("yuzhu", "玉竹", "Solomon's seal rhizome"),
    ("huangjing", "黄精", "Polygonatum rhizome"),
    ("maidong", "麦冬", "Ophiopogon tuber"),
    ("tiandong", "天冬", "Asparagus tuber"),
    ("baihe", "百合", "Lily bulb"),
    ("shashen", "沙参", "Glehnia root"),
    ("shihu", "石斛", "Dendrobium stem"),
    ("gegen", "葛根", "Kudzu root"),
    ("shengma", "升麻", "Cimicifuga rhizome"),
    ("fangfeng", "防风", "Saposhnikovia root"),
    ("jingjie", "荆芥", "Schizonepeta"),
    ("baizhi", "白芷", "Dahurian angelica root"),
    ("xixin", "细辛", "Asarum"),
    ("qianghuo", "羌活", "Notopterygium root"),
    ("duhuo", "独活", "Pubescent angelica root"),
    ("weilingxian", "威灵仙", "Clematis root"),
    ("qinjiao", "秦艽", "Large-leaf gentian root"),
    ("sangjisheng", "桑寄生", "Taxillus twig"),
    ("wujiapi", "五加皮", "Acanthopanax bark"),
    ("xiakucao", "夏枯草", "Self-heal spike"),
    ("zhimu", "知母", "Anemarrhena rhizome"),
    ("zhizi", "栀子", "Gardenia fruit"),
];

const REGIONS: [&str; 10] = [
    "Northeast China",
    "North China Plain",
    "Inner Mongolia",
    "Northwest China",
    "Sichuan Basin",
    "Yunnan-Guizhou Plateau",
    "Middle Yangtze",
    "Lower Yangtze",
    "South China",
    "Qinghai-Tibet Plateau",
];

/// Placeholder record for catalog slot `i` (0-based). Text is generated,
/// not botanical fact.
pub fn synthetic_entry(i: usize) -> HerbEntry {
    let (id, cn, en) = HERBS[i];
    let region = REGIONS[i % REGIONS.len()];
    HerbEntry {
        content_id: id.to_string(),
        name_cn: cn.to_string(),
        name_en: en.to_string(),
        source_area: format!("{region} (synthetic)"),
        usage: format!("Synthetic placeholder usage note for {en}."),
        morphology: Morphology {
            roots: format!("Synthetic root description #{i}."),
            stems: format!("Synthetic stem description #{i}."),
            leaves: format!("Synthetic leaf description #{i}."),
            seeds: format!("Synthetic seed description #{i}."),
        },
        ecology: Ecology {
            environment: format!("Synthetic habitat note: grows in {region}."),
            life_cycle: if i % 3 == 0 {
                "Perennial (synthetic).".into()
            } else {
                "Annual (synthetic).".into()
            },
        },
    }
}

pub fn synthetic_catalog() -> Catalog {
    Catalog::from_entries((0..CATALOG_SIZE).map(synthetic_entry)).expect("fixture ids are unique")
}

struct Canvas {
    img: ColorImage,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: [u8; 4]) {
        if x >= 0 && y >= 0 && x < self.img.width() as i64 && y < self.img.height() as i64 {
            self.img.set(x as u32, y as u32, c);
        }
    }

    fn ellipse(&mut self, cx: f64, cy: f64, rx: f64, ry: f64, angle: f64, c: [u8; 4]) {
        let (s, co) = angle.sin_cos();
        let r = rx.max(ry).ceil() as i64 + 1;
        for y in cy as i64 - r..=cy as i64 + r {
            for x in cx as i64 - r..=cx as i64 + r {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let u = dx * co + dy * s;
                let v = -dx * s + dy * co;
                if (u / rx).powi(2) + (v / ry).powi(2) <= 1.0 {
                    self.put(x, y, c);
                }
            }
        }
    }

    fn polygon(&mut self, pts: &[(f64, f64)], c: [u8; 4]) {
        let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor() as i64;
        let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
        for y in min_y..=max_y {
            let yc = y as f64 + 0.5;
            let mut xs = Vec::new();
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                if (a.1 <= yc && b.1 > yc) || (b.1 <= yc && a.1 > yc) {
                    xs.push(a.0 + (yc - a.1) / (b.1 - a.1) * (b.0 - a.0));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                for x in pair[0].round() as i64..pair[1].round() as i64 {
                    self.put(x, y, c);
                }
            }
        }
    }

    fn stroke(&mut self, a: (f64, f64), b: (f64, f64), width: f64, c: [u8; 4]) {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len = (dx * dx + dy * dy).sqrt().max(1e-9);
        let (nx, ny) = (-dy / len * width / 2.0, dx / len * width / 2.0);
        self.polygon(
            &[
                (a.0 + nx, a.1 + ny),
                (b.0 + nx, b.1 + ny),
                (b.0 - nx, b.1 - ny),
                (a.0 - nx, a.1 - ny),
            ],
            c,
        );
    }

    /// 3×3 box blur on the colour channels.
    fn soften(&mut self) {
        let (w, h) = (self.img.width(), self.img.height());
        let src = self.img.clone();
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0u32; 3];
                let mut n = 0;
                for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let p = src.get(xx, yy);
                        for ch in 0..3 {
                            acc[ch] += p[ch] as u32;
                        }
                        n += 1;
                    }
                }
                let avg = acc.map(|a| ((a + n / 2) / n) as u8);
                self.img.set(x, y, [avg[0], avg[1], avg[2], 255]);
            }
        }
    }
}

fn unit(rng: &mut XorShift64Star) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn colour(rng: &mut XorShift64Star) -> [u8; 4] {
    let v = rng.next_u64();
    [v as u8, (v >> 8) as u8, (v >> 16) as u8, 255]
}

/// High-texture picture number `index`: a pale plate covered with
/// overlapping leaf-like ellipses, polygons and stems, lightly blurred.
/// Different indices give unrelated pictures.
pub fn herb_picture(index: u32, width: u32, height: u32) -> ColorImage {
    let mut rng = XorShift64Star::new(0xC0FF_EE00_0000_0000 ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9));
    for _ in 0..4 {
        rng.next_u64();
    }
    let bg = [
        200 + (rng.next_u64() % 50) as u8,
        200 + (rng.next_u64() % 50) as u8,
        190 + (rng.next_u64() % 50) as u8,
        255,
    ];
    let mut canvas = Canvas {
        img: ColorImage::filled(width, height, bg),
    };
    let (w, h) = (width as f64, height as f64);
    let scale = w.min(h);
    let shapes = (w * h / 900.0) as usize;
    for _ in 0..shapes {
        let (x, y) = (unit(&mut rng) * w, unit(&mut rng) * h);
        let c = colour(&mut rng);
        match rng.next_u64() % 4 {
            0 => {
                let rx = scale * (0.01 + 0.05 * unit(&mut rng));
                let ry = rx * (0.3 + 0.7 * unit(&mut rng));
                canvas.ellipse(x, y, rx, ry, unit(&mut rng) * std::f64::consts::PI, c);
            }
            1 => {
                let r = scale * (0.015 + 0.05 * unit(&mut rng));
                let sides = 3 + (rng.next_u64() % 4) as usize;
                let pts: Vec<_> = (0..sides)
                    .map(|k| {
                        let a = (k as f64 + 0.6 * unit(&mut rng)) * std::f64::consts::TAU / sides as f64;
                        let rr = r * (0.5 + 0.5 * unit(&mut rng));
                        (x + rr * a.cos(), y + rr * a.sin())
                    })
                    .collect();
                canvas.polygon(&pts, c);
            }
            2 => {
                let len = scale * (0.03 + 0.12 * unit(&mut rng));
                let a = unit(&mut rng) * std::f64::consts::TAU;
                let end = (x + len * a.cos(), y + len * a.sin());
                canvas.stroke((x, y), end, 1.5 + 3.0 * unit(&mut rng), c);
            }
            _ => {
                let r = scale * (0.005 + 0.015 * unit(&mut rng));
                canvas.ellipse(x, y, r, r, 0.0, c);
            }
        }
    }
    canvas.soften();
    canvas.img
}

/// A plain sheet with one small dark square: too few features to be
/// recognized once part of it is covered.
pub fn low_texture_picture(width: u32, height: u32) -> ColorImage {
    let mut canvas = Canvas {
        img: ColorImage::filled(width, height, [246, 246, 240, 255]),
    };
    let (cx, cy) = (width as f64 * 0.3, height as f64 * 0.35);
    let r = width.min(height) as f64 * 0.08;
    canvas.polygon(&[(cx - r, cy - r), (cx + r, cy - r), (cx + r, cy + r), (cx - r, cy + r)], [60, 90, 40, 255]);
    canvas.img
}

/// A unit-width box standing on the picture with a pitched roof, sized to
/// the picture's aspect ratio.
pub fn box_model(name: &str, aspect: f64) -> WireframeModel {
    let h = aspect;
    let z = 0.35;
    let mut vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, h, 0.0],
        [0.0, h, 0.0],
        [0.0, 0.0, z],
        [1.0, 0.0, z],
        [1.0, h, z],
        [0.0, h, z],
    ];
    vertices.push([0.5, 0.0, z + 0.2]);
    vertices.push([0.5, h, z + 0.2]);
    let edges = vec![
        [0, 1],
        [1, 2],
        [2, 3],
        [3, 0],
        [4, 5],
        [5, 6],
        [6, 7],
        [7, 4],
        [0, 4],
        [1, 5],
        [2, 6],
        [3, 7],
        [4, 8],
        [5, 8],
        [7, 9],
        [6, 9],
        [8, 9],
    ];
    WireframeModel {
        name: name.to_string(),
        vertices,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_88_unique_entries() {
        let c = synthetic_catalog();
        assert_eq!(c.len(), CATALOG_SIZE);
        assert!(c.get("lingzhi").is_some() && c.get("aiye").is_some() && c.get("baijitian").is_some());
    }

    #[test]
    fn pictures_are_deterministic_and_distinct() {
        let a = herb_picture(3, 96, 80);
        assert_eq!(a, herb_picture(3, 96, 80));
        assert_ne!(a, herb_picture(4, 96, 80));
        assert_eq!((a.width(), a.height()), (96, 80));
    }

    #[test]
    fn box_model_is_valid() {
        box_model("x", 0.75).validate().unwrap();
    }
}
