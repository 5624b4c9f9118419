//! Built-in English stopword list used by the language filter.

pub const ENGLISH_STOPWORDS: [&str; 200] = [
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "whose", "this", "that", "these", "those", "am", "is", "are", "was", "were",
    "be", "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a",
    "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
    "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor",
    "not", "only", "own", "same", "so", "than", "too", "very", "can", "will", "just", "should",
    "now", "would", "could", "may", "might", "must", "shall", "also", "one", "two", "like",
    "many", "much", "every", "something", "anything", "nothing", "someone", "anyone",
    "everyone", "everything", "thing", "things", "make", "makes", "made", "get", "gets", "got",
    "go", "goes", "going", "went", "use", "used", "cannot", "can't", "don't", "doesn't",
    "didn't", "isn't", "aren't", "wasn't", "weren't", "won't", "wouldn't", "shouldn't",
    "couldn't", "it's", "i'm", "you're", "he's", "she's", "that's", "there's", "let's", "yes",
    "well", "even", "still", "already", "never", "always", "often", "sometimes", "usually",
    "really", "quite", "since", "though", "although", "unless", "whether", "yet", "ever",
    "another",
];
