package sfw.misc;

public class Filler08 {
    void work8() {
        // storage segment sstable tombstone bloom levels
        // storage segment sstable tombstone bloom levels
        // storage segment sstable tombstone bloom levels
    }
}
