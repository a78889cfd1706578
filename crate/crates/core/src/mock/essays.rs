//! Canned essays served by the mock backend, one pair per built-in topic.

pub const TOPICS: [&str; 4] = [
    "Please describe a country or region you would like to visit.",
    "Please introduce your favorite movie.",
    "Explain whether you prefer outdoor activities or indoor play.",
    "What is the most impressive class you have taken so far?",
];

/// Clean drafts returned for the draft stage.
pub const DRAFTS: [&str; 4] = [
    "I would like to visit Norway because the country seems calm and beautiful. \
Many people say that the fjords look like a painting. \
I want to take a boat along the coast and see the steep cliffs. \
In the summer the sun stays in the sky until late at night, so visitors can walk for hours. \
I also hope to try the local food, especially fresh salmon. \
My friend lives in Bergen, and she often tells me about the colorful houses near the harbor. \
She thinks the city feels friendly and quiet. \
If I save enough money, I will go there next year and explore the mountains with her.",
    "My favorite movie is Spirited Away, an animated film by Hayao Miyazaki. \
It tells the story of a young girl who enters a strange world full of spirits. \
Her parents eat food that belongs to the gods, and they turn into pigs. \
To save them, the girl works in a large bathhouse and learns to be brave. \
I like the movie because every scene looks like a careful painting. \
The music also helps me feel calm when I watch it at night. \
Each time I see the film, I find a small detail that I missed before. \
I think this story teaches children and adults that kindness can change the world.",
    "I prefer outdoor activities because they make me feel healthy and free. \
On weekends I often walk along the river near my house with my dog. \
When the weather is warm, my friends and I play soccer in the park for a few hours. \
Running on the grass helps me forget the stress of my job. \
Indoor games can be fun, but I get bored quickly when I stay inside all day. \
In autumn we climb a small mountain and look at the red leaves. \
The fresh air gives me energy for the whole week. \
For these reasons, I think outdoor activities are the best way to relax.",
    "The most impressive class I have taken so far is a history seminar at my university. \
Our teacher was a retired diplomat who visited more than forty countries. \
He always started the lesson with a short story from his travels. \
Instead of giving long lectures, he asked us to discuss real problems in small groups. \
Every week we read old newspapers and explained the events to each other. \
I remember one debate about a border conflict that lasted for two hours. \
That class taught me to listen carefully before I judge other people. \
I still use this lesson when I talk with my coworkers, and I hope to take a similar class again.",
];

/// Clean essays returned for the one-shot comparison stage.
pub const COMPARISONS: [&str; 4] = [
    "If I could choose any place, I would travel to Peru. \
The ancient city of Machu Picchu has fascinated me since I was a child. \
I would like to hike the Inca Trail with a small group of friends. \
The views from the mountains must be amazing at sunrise. \
I also want to visit the markets in Cusco and buy colorful blankets. \
Peruvian food is famous, so I am excited to taste ceviche. \
Learning some Spanish before the trip would make the journey easier. \
I believe this adventure would be unforgettable.",
    "My favorite movie is The Shawshank Redemption. \
The film follows a banker who is sent to prison for a crime he did not commit. \
Although his life becomes very hard, he never loses hope. \
He makes friends with another prisoner named Red, and their friendship grows over many years. \
I admire the way the story shows patience and courage. \
The ending surprised me the first time I watched it. \
Whenever I feel tired or sad, I remember this movie. \
It reminds me that hope is a good thing.",
    "I prefer indoor play, especially board games with my family. \
Every Friday evening we gather around the kitchen table and choose a game. \
My younger brother is very competitive, so the matches are always exciting. \
Board games teach us to plan ahead and to be patient. \
Outdoor sports are healthy, but I do not enjoy hot or rainy weather. \
Staying inside also lets me read books and listen to music. \
For me, a quiet evening at home is the perfect way to rest.",
    "The most impressive class I have taken was a cooking course in high school. \
Our teacher showed us how to prepare simple dishes from different countries. \
In the first lesson, we made fresh pasta by hand. \
I was surprised that such simple ingredients could taste so good. \
Later we learned to bake bread and cook curry. \
Working in teams taught me how to share tasks and communicate clearly. \
Now I often cook dinner for my parents on weekends. \
This class gave me a useful skill for my whole life.",
];

/// Index of the canned essay pair for a topic: the built-in topic with the
/// same text, otherwise a stable hash of the topic.
pub fn topic_index(topic: &str) -> usize {
    let t = topic.trim();
    TOPICS.iter().position(|k| *k == t).unwrap_or_else(|| {
        let sum: usize = t.bytes().map(usize::from).sum();
        sum % TOPICS.len()
    })
}
