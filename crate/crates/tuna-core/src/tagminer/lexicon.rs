//! Bundled default word lists for the rule-based tag grammar.
//!
//! The lists are deliberately small and caption-oriented: common objects,
//! animals, scenery, clothing, and the attributes captions attach to them.
//! Unknown words default to nouns at mining time, so these lists mainly
//! exist to (a) recognize adjectives that should attach to a following
//! noun and (b) filter out function words and frequent caption verbs.
//! The three lists are disjoint; ambiguous words are assigned to the class
//! that best serves attributed-object tags (e.g. `orange` is the color).

/// Function words plus verbs common in captions. Stopwords never begin or
/// end a tag and never participate in noun-phrase spans.
pub(crate) const STOPWORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "it", "its", "he", "she", "they", "them",
    "his", "her", "hers", "their", "theirs", "we", "us", "our", "ours", "you", "your", "yours",
    "i", "me", "my", "mine", "who", "whom", "whose", "which", "what", "where", "when", "why",
    "how", "and", "or", "but", "nor", "so", "yet", "if", "because", "while", "although", "though",
    "whereas", "of", "in", "on", "at", "by", "for", "with", "without", "from", "to", "into",
    "onto", "over", "under", "above", "below", "between", "among", "through", "across", "around",
    "near", "beside", "behind", "beyond", "during", "before", "after", "against", "along", "amid",
    "atop", "upon", "within", "toward", "towards", "up", "down", "out", "off", "as", "than",
    "too", "very", "quite", "rather", "just", "only", "also", "not", "no", "both", "each", "few",
    "several", "more", "most", "much", "many", "some", "any", "all", "such", "own", "same",
    "other", "another", "here", "there", "now", "then", "once", "again", "ever", "never",
    "always", "often", "is", "are", "was", "were", "be", "been", "being", "am", "has", "have",
    "had", "having", "do", "does", "did", "done", "doing", "can", "could", "will", "would",
    "shall", "should", "may", "might", "must", "sit", "sits", "sat", "sitting", "stand", "stands",
    "stood", "standing", "walk", "walks", "walked", "walking", "run", "runs", "ran", "running",
    "go", "goes", "went", "gone", "going", "come", "comes", "came", "coming", "see", "sees",
    "saw", "seen", "seeing", "look", "looks", "looked", "looking", "make", "makes", "made",
    "making", "take", "takes", "took", "taken", "taking", "get", "gets", "got", "getting",
    "give", "gives", "gave", "given", "giving", "hold", "holds", "held", "holding", "keep",
    "keeps", "kept", "keeping", "say", "says", "said", "saying", "show", "shows", "showed",
    "shown", "showing", "wear", "wears", "wore", "worn", "wearing", "play", "plays", "played",
    "playing", "ride", "rides", "rode", "ridden", "riding", "fly", "flies", "flew", "flown",
    "flying", "eat", "eats", "ate", "eaten", "eating", "drink", "drinks", "drank", "drinking",
    "hang", "hangs", "hung", "hanging", "lie", "lies", "lay", "lying", "laying", "rest", "rests",
    "rested", "resting", "lean", "leans", "leaned", "leaning", "jump", "jumps", "jumped",
    "jumping", "swim", "swims", "swam", "swimming", "featuring", "overlooking", "surrounded",
    "filled", "covered", "placed", "located", "captured", "posing", "smiling",
];

/// Common caption nouns: objects, creatures, scenery, places, garments.
pub(crate) const NOUNS: &[&str] = &[
    // animals
    "cat", "cats", "dog", "dogs", "kitten", "puppy", "bird", "birds", "horse", "horses", "cow",
    "cows", "sheep", "goat", "goats", "pig", "pigs", "rabbit", "rabbits", "lion", "lions",
    "tiger", "tigers", "bear", "bears", "elephant", "elephants", "monkey", "monkeys", "giraffe",
    "zebra", "deer", "fox", "wolf", "owl", "eagle", "duck", "ducks", "chicken", "chickens",
    "fish", "whale", "dolphin", "shark", "butterfly", "butterflies", "bee", "bees", "insect",
    "frog", "turtle", "snake", "penguin", "penguins", "swan", "crab",
    // people
    "man", "men", "woman", "women", "boy", "boys", "girl", "girls", "child", "children", "kid",
    "kids", "baby", "person", "people", "family", "crowd", "couple", "rider", "player", "chef",
    "artist", "musician", "dancer", "farmer", "fisherman", "teacher", "student", "bride",
    "groom", "model", "tourist", "tourists", "hiker", "surfer",
    // food
    "apple", "apples", "banana", "bananas", "lemon", "lemons", "grape", "grapes", "strawberry",
    "strawberries", "mango", "mangosteen", "mangosteens", "durian", "peach", "pear", "cherry",
    "cherries", "melon", "watermelon", "pineapple", "coconut", "bread", "cake", "cakes",
    "cheese", "pizza", "pasta", "salad", "soup", "rice", "noodle", "noodles", "sandwich",
    "burger", "coffee", "tea", "juice", "wine", "beer", "milk", "chocolate", "cookie",
    "cookies", "fruit", "fruits", "vegetable", "vegetables", "tomato", "tomatoes", "potato",
    "potatoes", "carrot", "carrots", "onion", "mushroom", "mushrooms", "dessert", "breakfast",
    "dinner", "lunch", "meal", "olive", "olives",
    // household objects
    "table", "tables", "chair", "chairs", "sofa", "couch", "bench", "benches", "desk", "bed",
    "shelf", "shelves", "lamp", "lamps", "mirror", "rug", "carpet", "mat", "curtain", "curtains",
    "pillow", "cushion", "blanket", "vase", "bowl", "plate", "plates", "cup", "cups", "mug",
    "glass", "glasses", "bottle", "bottles", "jar", "basket", "baskets", "box", "boxes", "bag",
    "bags", "clock", "clocks", "candle", "candles", "book", "books", "painting", "paintings",
    "sculpture", "statue", "frame", "photograph", "photo", "photos", "picture", "pictures",
    "poster", "sign", "signs", "umbrella", "toy", "toys", "ball", "balloon", "balloons", "kite",
    "guitar", "piano", "violin", "drum", "drums", "camera", "phone", "laptop", "computer",
    "keyboard", "screen", "television", "radio", "knife", "knives", "fork", "spoon", "pan",
    "pot", "kettle", "oven", "stove", "refrigerator", "sink", "towel", "brush", "pen", "pencil",
    "paper", "notebook", "letter", "map", "coin", "coins", "key", "keys", "watch", "ring",
    "necklace", "bracelet", "earring", "earrings", "crown", "helmet", "ladder", "rope", "tool",
    "tools", "hammer", "wheel", "wheels", "tire", "tires", "engine", "flag", "lantern",
    // clothing and fashion
    "jacket", "jackets", "blazer", "coat", "coats", "dress", "dresses", "skirt", "skirts",
    "shirt", "shirts", "t-shirt", "blouse", "sweater", "cardigan", "hoodie", "jeans",
    "trousers", "pants", "shorts", "suit", "suits", "tie", "scarf", "scarves", "hat", "hats",
    "cap", "caps", "boot", "boots", "shoe", "shoes", "sneaker", "sneakers", "sandal", "sandals",
    "heel", "heels", "sock", "socks", "glove", "gloves", "belt", "belts", "handbag", "purse",
    "wallet", "backpack", "uniform", "gown", "costume", "outfit", "fabric", "cotton", "silk",
    "wool", "leather", "denim", "lace", "velvet", "satin", "linen", "polka", "dot", "dots",
    "button", "buttons", "zipper", "collar", "sleeve", "sleeves", "pocket", "pockets", "brand",
    "logo", "clothing", "fashion",
    // nature
    "tree", "trees", "forest", "flower", "flowers", "roses", "tulip", "garden", "gardens",
    "grass", "leaf", "leaves", "branch", "branches", "plant", "plants", "bush", "bushes",
    "mountain", "mountains", "hill", "hills", "valley", "cliff", "cliffs", "rock", "rocks",
    "stone", "stones", "river", "rivers", "lake", "lakes", "ocean", "sea", "beach", "beaches",
    "coast", "shore", "island", "islands", "desert", "dune", "dunes", "waterfall", "stream",
    "pond", "field", "fields", "meadow", "sky", "cloud", "clouds", "sun", "sunset", "sunrise",
    "dusk", "dawn", "moon", "star", "stars", "rainbow", "snow", "rain", "storm", "fog", "mist",
    "wave", "waves", "sand", "ice", "glacier", "volcano", "canyon", "cave", "rose", "vegetation",
    // places and structures
    "house", "houses", "home", "building", "buildings", "tower", "towers", "bridge", "bridges",
    "castle", "palace", "church", "cathedral", "temple", "mosque", "museum", "library",
    "school", "hospital", "hotel", "restaurant", "cafe", "shop", "shops", "store", "stores",
    "market", "markets", "mall", "stadium", "arena", "theater", "cinema", "station", "airport",
    "harbor", "port", "lighthouse", "windmill", "barn", "farm", "farms", "fence", "fences",
    "gate", "gates", "wall", "walls", "roof", "roofs", "window", "windows", "door", "doors",
    "balcony", "stairs", "staircase", "street", "streets", "road", "roads", "path", "paths",
    "sidewalk", "alley", "square", "plaza", "park", "parks", "playground", "fountain", "pool",
    "city", "cities", "town", "towns", "village", "villages", "skyline", "landmark",
    "monument", "ruins", "pyramid", "architecture",
    // vehicles
    "car", "cars", "truck", "trucks", "bus", "buses", "train", "trains", "tram", "bicycle",
    "bicycles", "bike", "bikes", "motorcycle", "scooter", "boat", "boats", "ship", "ships",
    "yacht", "canoe", "kayak", "ferry", "airplane", "plane", "planes", "jet", "helicopter",
    "rocket", "taxi", "van", "ambulance",
    // scene vocabulary
    "view", "views", "scene", "scenery", "landscape", "portrait", "background", "foreground",
    "detail", "details", "design", "pattern", "patterns", "texture", "color", "colors",
    "style", "light", "lights", "lighting", "shadow", "shadows", "reflection", "silhouette",
    "group", "bunch", "pair", "row", "stack", "pile", "corner", "edge", "top", "side",
    "middle", "center", "day", "night", "morning", "evening", "afternoon", "winter", "summer",
    "spring", "autumn", "season", "holiday", "festival", "party", "wedding", "concert",
    "game", "match", "race", "parade", "ceremony", "event", "product", "item",
];

/// Common caption adjectives: colors, sizes, materials, qualities.
pub(crate) const ADJECTIVES: &[&str] = &[
    // colors
    "red", "blue", "green", "yellow", "orange", "purple", "pink", "brown", "black", "white",
    "gray", "grey", "golden", "silver", "beige", "turquoise", "violet", "crimson", "scarlet",
    "navy", "teal", "maroon",
    // sizes and shapes
    "big", "small", "large", "little", "tiny", "huge", "giant", "tall", "short", "long",
    "wide", "narrow", "thick", "thin", "deep", "shallow", "high", "low", "round", "circular",
    "oval", "rectangular", "triangular", "curved", "straight", "steep",
    // materials and surfaces
    "wooden", "metallic", "plastic", "ceramic", "stainless", "floral", "striped", "spotted",
    "checkered", "patterned", "embroidered", "knitted", "woven", "painted", "carved",
    "polished", "rusty", "glazed", "frosted",
    // qualities
    "old", "young", "new", "ancient", "modern", "vintage", "antique", "beautiful", "pretty",
    "lovely", "gorgeous", "elegant", "stylish", "fancy", "plain", "simple", "ornate", "rustic",
    "cozy", "bright", "dark", "colorful", "vibrant", "pale", "shiny", "glossy", "matte",
    "soft", "hard", "smooth", "rough", "fluffy", "furry", "fuzzy", "wet", "dry", "clean",
    "dirty", "dusty", "fresh", "ripe", "sweet", "delicious", "tasty", "hot", "cold", "warm",
    "cool", "icy", "frozen", "snowy", "rainy", "sunny", "cloudy", "foggy", "misty", "windy",
    "calm", "quiet", "busy", "crowded", "empty", "full", "open", "closed", "broken", "happy",
    "sad", "cute", "adorable", "funny", "serious", "famous", "popular", "traditional",
    "classic", "contemporary", "abstract", "scenic", "panoramic", "aerial", "urban", "rural",
    "coastal", "tropical", "alpine", "historic", "historical", "royal", "grand", "majestic",
    "stunning", "spectacular", "picturesque", "remote", "distant", "local", "wild", "domestic",
    "exotic", "rare", "unique", "luxurious", "expensive", "cheap", "comfortable", "accessible",
    "delicate", "intricate", "detailed", "handmade", "homemade", "organic", "natural",
    "artificial", "electric", "electronic", "digital", "solar", "elderly", "male", "female",
    "double", "single", "rocky", "sandy", "grassy", "leafy", "blooming", "decorated",
    "illuminated", "glowing", "sparkling",
];

/// Suffixes that mark an unknown word as a noun.
pub(crate) const NOUN_SUFFIXES: &[&str] = &[
    "ness", "tion", "sion", "ment", "ity", "ance", "ence", "ism", "ship", "hood", "scape",
];

/// Suffixes that mark an unknown word as an adjective.
pub(crate) const ADJECTIVE_SUFFIXES: &[&str] =
    &["ous", "ful", "less", "ish", "ive", "able", "ible"];

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn lists_are_disjoint() {
        let stop: BTreeSet<_> = STOPWORDS.iter().collect();
        let noun: BTreeSet<_> = NOUNS.iter().collect();
        let adj: BTreeSet<_> = ADJECTIVES.iter().collect();
        assert!(stop.intersection(&noun).next().is_none());
        assert!(stop.intersection(&adj).next().is_none());
        assert!(noun.intersection(&adj).next().is_none());
    }

    #[test]
    fn lists_are_lowercase_and_trimmed() {
        for w in STOPWORDS.iter().chain(NOUNS).chain(ADJECTIVES) {
            assert_eq!(*w, w.trim());
            assert_eq!(*w, w.to_lowercase());
        }
    }
}
